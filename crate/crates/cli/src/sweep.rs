//! Parameter axes and grid evaluation.

use std::str::FromStr;

use junction_core::cavity::CavityConfig;
use junction_core::config::Config;
use junction_core::model::{kelvin_to_ev, JunctionModel, AMPERES_PER_EV};
use junction_core::transport::{Solver, TransportResult};
use junction_core::Error;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Bias,
    Lambda,
    Gamma,
    TemperatureKelvin,
    NSites,
    RabiRatio,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Bias => "V",
            Param::Lambda => "lambda",
            Param::Gamma => "gamma",
            Param::TemperatureKelvin => "T_kelvin",
            Param::NSites => "n_sites",
            Param::RabiRatio => "rabi_ratio",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "V" => Param::Bias,
            "lambda" => Param::Lambda,
            "gamma" => Param::Gamma,
            "T_kelvin" => Param::TemperatureKelvin,
            "n_sites" => Param::NSites,
            "rabi_ratio" => Param::RabiRatio,
            _ => return Err(format!("unknown axis `{s}` (expected V, lambda, gamma, T_kelvin, n_sites or rabi_ratio)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let at = |k: usize| {
            let t = k as f64 / (n - 1) as f64;
            if self.log {
                (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
            } else {
                self.start + t * (self.stop - self.start)
            }
        };
        // Pin the endpoints so they are reproduced exactly.
        (0..n)
            .map(|k| match k {
                0 => self.start,
                k if k == n - 1 => self.stop,
                k => at(k),
            })
            .collect()
    }
}

/// Parses `NAME:START:STOP:COUNT[:log|:linear]`.
impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(format!("axis `{s}` must look like NAME:START:STOP:COUNT[:log]"));
        }
        let param: Param = parts[0].parse()?;
        let number = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("axis `{s}`: `{p}` is not a number"));
        let (start, stop) = (number(parts[1])?, number(parts[2])?);
        let count: usize = parts[3]
            .trim()
            .parse()
            .map_err(|_| format!("axis `{s}`: count `{}` is not a whole number", parts[3]))?;
        let log = match parts.get(4).map(|p| p.trim()) {
            None | Some("linear") => false,
            Some("log") => true,
            Some(other) => return Err(format!("axis `{s}`: unknown scale `{other}`")),
        };
        if count < 2 {
            return Err(format!("axis `{s}`: count must be at least 2"));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(format!("axis `{s}`: endpoints must be finite"));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(format!("axis `{s}`: log scale needs positive endpoints"));
        }
        if param == Param::NSites {
            if log {
                return Err(format!("axis `{s}`: n_sites must be linear"));
            }
            let whole = |x: f64| x >= 1.0 && x.fract() == 0.0;
            let span = stop - start;
            if !(whole(start) && whole(stop) && (span / (count - 1) as f64).fract() == 0.0) {
                return Err(format!("axis `{s}`: n_sites values must be whole numbers of at least 1"));
            }
        }
        Ok(Axis { param, start, stop, count, log })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    JLeft,
    JRight,
    Occupation,
    Residual,
}

impl Output {
    pub const ALL: [Output; 4] = [Output::JLeft, Output::JRight, Output::Occupation, Output::Residual];

    fn column(self) -> &'static str {
        match self {
            Output::JLeft => "j_left_ev",
            Output::JRight => "j_right_ev",
            Output::Occupation => "occupation",
            Output::Residual => "residual",
        }
    }

    fn value(self, r: &TransportResult) -> f64 {
        match self {
            Output::JLeft => r.j_left,
            Output::JRight => r.j_right,
            Output::Occupation => r.occupation_site1,
            Output::Residual => r.conservation_residual,
        }
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "j_left" => Output::JLeft,
            "j_right" => Output::JRight,
            "occupation" => Output::Occupation,
            "residual" => Output::Residual,
            _ => return Err(format!("unknown output `{s}` (expected j_left, j_right, occupation or residual)")),
        })
    }
}

/// Model and cavity at one grid point.
fn configure(base: &Config, axes: &[Axis], values: &[f64]) -> Result<(JunctionModel, Option<CavityConfig>), Error> {
    let mut model = base.model.clone();
    let mut cavity = base.cavity;
    // Chain length first so per-site settings apply to every site.
    let mut order: Vec<usize> = (0..axes.len()).collect();
    order.sort_by_key(|&i| axes[i].param != Param::NSites);
    for i in order {
        let v = values[i];
        match axes[i].param {
            Param::Bias => model = model.with_bias(v),
            Param::Lambda => model = model.with_lambda(v),
            Param::Gamma => model = model.with_gamma_total(v),
            Param::TemperatureKelvin => model.temperature = kelvin_to_ev(v),
            Param::NSites => {
                let n = v as usize;
                let hopping = match (n, base.chain_hopping) {
                    (1, h) => h.unwrap_or(0.0),
                    (_, Some(h)) => h,
                    (_, None) => {
                        return Err(Error::invalid("junction.hoppings_ev", "an n_sites sweep needs a hopping"))
                    }
                };
                model = model.with_n_sites(n, hopping);
            }
            Param::RabiRatio => {
                let c = cavity.ok_or_else(|| Error::invalid("cavity", "a rabi_ratio sweep needs a [cavity] section"))?;
                cavity = Some(c.with_rabi_ratio(v));
            }
        }
    }
    Ok((model, cavity))
}

/// Row-major grid over the axes; the last axis varies fastest.
pub fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::new()];
    for axis in axes {
        let values = axis.values();
        rows = rows
            .into_iter()
            .flat_map(|row| {
                values.iter().map(move |&v| {
                    let mut next = row.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    rows
}

pub struct SweepOptions {
    pub outputs: Vec<Output>,
    pub amperes: bool,
}

/// Evaluates every grid point in parallel and writes CSV rows in grid order.
pub fn run_sweep<W: std::io::Write>(
    config: &Config,
    axes: &[Axis],
    solver: &Solver,
    options: &SweepOptions,
    out: W,
) -> csv::Result<usize> {
    let points = grid(axes);
    let results: Vec<Result<TransportResult, Error>> = points
        .par_iter()
        .map(|values| {
            let (model, cavity) = configure(config, axes, values)?;
            Ok(solver.solve_with_cavity(&model, cavity.as_ref())?.result)
        })
        .collect();

    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = axes.iter().map(|a| a.param.name().to_string()).collect();
    header.extend(options.outputs.iter().map(|o| o.column().to_string()));
    if options.amperes {
        for (o, name) in [(Output::JLeft, "j_left_a"), (Output::JRight, "j_right_a")] {
            if options.outputs.contains(&o) {
                header.push(name.to_string());
            }
        }
    }
    header.push("converged".into());
    header.push("error".into());
    writer.write_record(&header)?;

    let mut failures = 0;
    for (values, result) in points.iter().zip(&results) {
        let mut row: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        match result {
            Ok(r) => {
                row.extend(options.outputs.iter().map(|o| format!("{:?}", o.value(r))));
                if options.amperes {
                    for o in [Output::JLeft, Output::JRight] {
                        if options.outputs.contains(&o) {
                            row.push(format!("{:?}", o.value(r) * AMPERES_PER_EV));
                        }
                    }
                }
                row.push(r.diagnostics.converged.to_string());
                row.push(String::new());
            }
            Err(e) => {
                failures += 1;
                let blanks = header.len() - values.len() - 2;
                row.extend(std::iter::repeat_n(String::new(), blanks));
                row.push("false".into());
                row.push(format!("{}: {e}", e.category().as_str()));
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_axes() {
        let a: Axis = "V:0:3:301".parse().unwrap();
        assert_eq!((a.param, a.count, a.log), (Param::Bias, 301, false));
        let v = a.values();
        assert_eq!((v[0], v[300]), (0.0, 3.0));
        assert!((v[100] - 1.0).abs() < 1e-15);
        let g: Axis = "gamma:0.01:1:61:log".parse().unwrap();
        let v = g.values();
        assert_eq!((v[0], v[60]), (0.01, 1.0));
        assert!((v[30] - 0.1).abs() < 1e-15);
        assert!("n_sites:1:15:15".parse::<Axis>().is_ok());
        for bad in ["V:0:3:1", "gamma:0:1:5:log", "n_sites:1:15:4", "phi:0:1:3", "V:0:3", "V:0:x:3", "V:0:1:3:cubic"] {
            assert!(bad.parse::<Axis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_is_row_major() {
        let axes: Vec<Axis> = ["lambda:0:1:2", "V:0:2:3"].iter().map(|s| s.parse().unwrap()).collect();
        let g = grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 1.0]);
        assert_eq!(g[3], vec![1.0, 0.0]);
    }
}
