use std::fs;

use cbo_core::{
    check_lambda, empirical_fisher_gaussian_mean, gaussian_kl_mc, gaussian_kl_same_cov, min_iterations_estimate,
    DecayParams, RngStream,
};
use nalgebra::DMatrix;

use crate::{CliError, DiagArgs, DiagCommand};

/// A named set of `(quantity, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagReport {
    pub check: &'static str,
    pub values: Vec<(&'static str, f64)>,
}

impl DiagReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,quantity,value\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{},{k},{v}\n", self.check));
        }
        out
    }
}

/// `B Bᵀ / dim + I / 2` with standard normal `B`, drawn from `rng`.
pub fn random_spd(dim: usize, rng: &RngStream) -> DMatrix<f64> {
    let mut r = rng.at(u64::MAX, 0);
    let b = DMatrix::from_fn(dim, dim, |_, _| r.standard_normal());
    &b * b.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.5
}

fn precondition(e: cbo_core::Error) -> CliError {
    match e {
        cbo_core::Error::InvalidInput(_) | cbo_core::Error::Precondition(_) => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.into()),
    }
}

pub fn diag_report(check: &DiagCommand) -> Result<DiagReport, CliError> {
    Ok(match *check {
        DiagCommand::Lambda { sigma, na, horizon } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(CliError::Config("--sigma must be nonnegative".into()));
            }
            DiagReport {
                check: "lambda",
                values: vec![("threshold", check_lambda(sigma, na, horizon))],
            }
        }
        DiagCommand::Rstar {
            theta,
            v0,
            vfloor,
            denom,
            lambda,
            sigma,
            na,
            horizon,
        } => {
            let p = match (denom, lambda, sigma) {
                (Some(d), _, _) => DecayParams {
                    lambda: d / 2.0,
                    sigma: 0.0,
                    n_a: na,
                    horizon,
                    theta,
                    v0,
                    v_floor: vfloor,
                },
                (None, Some(lambda), Some(sigma)) => DecayParams {
                    lambda,
                    sigma,
                    n_a: na,
                    horizon,
                    theta,
                    v0,
                    v_floor: vfloor,
                },
                _ => return Err(CliError::Config("rstar needs --denom or both --lambda and --sigma".into())),
            };
            let r = min_iterations_estimate(&p).map_err(precondition)?;
            DiagReport {
                check: "rstar",
                values: vec![("exponent", p.exponent()), ("r_star", r)],
            }
        }
        DiagCommand::Fisher { dim, samples, seed } => {
            let rng = RngStream::new(seed);
            let sigma = random_spd(dim, &rng);
            let est = empirical_fisher_gaussian_mean(&sigma, samples, &rng).map_err(precondition)?;
            let exact = sigma.clone().try_inverse().ok_or(CliError::Runtime(cbo_core::Error::Singular.into()))?;
            DiagReport {
                check: "fisher",
                values: vec![
                    ("samples", samples as f64),
                    ("relative_frobenius_residual", (&est - &exact).norm() / exact.norm()),
                ],
            }
        }
        DiagCommand::Kl { dim, samples, seed } => {
            let rng = RngStream::new(seed);
            let sigma = random_spd(dim, &rng);
            let mu0 = vec![0.0; dim];
            let mu1 = rng.at(u64::MAX, 1).standard_normals(dim);
            let exact = gaussian_kl_same_cov(&mu0, &mu1, &sigma).map_err(precondition)?;
            let mc = gaussian_kl_mc(&mu0, &mu1, &sigma, samples, &rng).map_err(precondition)?;
            DiagReport {
                check: "kl",
                values: vec![
                    ("closed_form", exact),
                    ("monte_carlo", mc.value),
                    ("standard_error", mc.standard_error),
                    ("relative_residual", (mc.value - exact).abs() / exact),
                ],
            }
        }
    })
}

pub fn cmd_diag(args: &DiagArgs) -> Result<DiagReport, CliError> {
    let report = diag_report(&args.check)?;
    for (k, v) in &report.values {
        println!("{} {k} = {v:.6}", report.check);
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("diag_{}.csv", report.check));
        fs::write(&path, report.to_csv())?;
        println!("report -> {}", path.display());
    }
    Ok(report)
}
