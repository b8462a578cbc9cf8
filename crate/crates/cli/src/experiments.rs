//! The three sweeps and the validation bundle.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use qcomp_core::channel::{make_scheme, SchemeMode};
use qcomp_core::fidelity::{entanglement_fidelity_kraus, fs_bounds_with_spectrum};
use qcomp_core::typicality::{beta, eta, typical_subspace, TypicalSubspace};
use qcomp_core::validate::{run_all, SuiteReport};
use qcomp_core::{floor_pow2, log2_big, Error, SourceModel};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{format_sig, ReportRow};

/// Allowance for the fidelity and dimension bounds asserted per row.
pub const ROW_TOL: f64 = 1e-9;

/// Maps a core error to a skipped row (resource limits, empty subspace) or a
/// failed one.
fn with_error(row: ReportRow, err: &Error) -> ReportRow {
    match err {
        Error::DenseCapExceeded { .. } => row.skipped("dense_cap_exceeded"),
        Error::SpectralCapExceeded(_) => row.skipped("spectral_cap_exceeded"),
        Error::EmptySubspace(_) => row.skipped("empty_subspace"),
        other => {
            eprintln!(
                "{} n={} {}={}: {other}",
                row.experiment, row.n, row.param_kind, row.param
            );
            let mut row = row;
            row.fail("error");
            row
        }
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `ceil(log2 d)`
fn qubits_for(d: &BigUint) -> u64 {
    if d <= &BigUint::one() {
        0
    } else {
        (d - BigUint::one()).bits()
    }
}

fn typical_bounds_ok(t: &TypicalSubspace, n: usize, s: f64, eps: f64) -> bool {
    if t.is_empty() {
        return true;
    }
    let nf = n as f64;
    t.log2_dim <= nf * (s + eps) + ROW_TOL && t.mass.log2() + nf * (s - eps) <= t.log2_dim + ROW_TOL
}

/// Rows per `(n, epsilon)`: beta, typical subspace and its dimension bounds.
pub fn aep(cfg: &ExperimentConfig, src: &SourceModel) -> Vec<ReportRow> {
    let label = cfg.source_label();
    let s = src.entropy_rate_exact();
    let epsilons = sorted(&cfg.epsilon_list);
    let per_n: Vec<Vec<ReportRow>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let blank = |eps: f64| ReportRow::new("aep", &label, n, "epsilon", eps);
            let spec = match src.class_spectrum(n) {
                Ok(spec) => spec,
                Err(e) => return epsilons.iter().map(|&eps| with_error(blank(eps), &e)).collect(),
            };
            let shared = start.elapsed().as_secs_f64();
            epsilons
                .iter()
                .map(|&eps| {
                    let t0 = Instant::now();
                    let mut row = blank(eps);
                    row.entropy_rate = Some(s);
                    let hp = match beta(&spec, eps) {
                        Ok(hp) => hp,
                        Err(e) => return with_error(row, &e),
                    };
                    row.beta = Some(hp.beta());
                    row.beta_rate = Some(hp.beta() / n as f64);
                    row.beta_qubits = Some(hp.qubits());
                    row.high_prob_mass = Some(hp.mass);
                    let t = match typical_subspace(&spec, n, s, eps) {
                        Ok(t) => t,
                        Err(e) => return with_error(row, &e),
                    };
                    row.typical_mass = Some(t.mass);
                    row.typical_log2_dim_rate = (!t.is_empty()).then(|| t.log2_dim / n as f64);
                    let ok = typical_bounds_ok(&t, n, s, eps);
                    row.typical_bounds_ok = Some(ok);
                    if !ok {
                        row.fail("typical_bounds_violated");
                    }
                    row.verify_bounds();
                    row.wall_time_s = shared + t0.elapsed().as_secs_f64();
                    row
                })
                .collect()
        })
        .collect();
    per_n.into_iter().flatten().collect()
}

/// Rows per `n` for the scheduled `eps_n` and per `(n, epsilon)` for the
/// configured list, all from dense epsilon-mode schemes.
pub fn compress(cfg: &ExperimentConfig, src: &SourceModel) -> Vec<ReportRow> {
    let label = cfg.source_label();
    let s = src.entropy_rate_exact();
    let mut tasks = Vec::new();
    for &n in &cfg.n_list {
        let scheduled = cfg.schedule.epsilon(n);
        let mut params: Vec<(f64, &'static str)> = vec![(scheduled, "epsilon_schedule")];
        params.extend(
            sorted(&cfg.epsilon_list)
                .into_iter()
                .filter(|&e| e != scheduled)
                .map(|e| (e, "epsilon")),
        );
        params.sort_by(|a, b| a.0.total_cmp(&b.0));
        tasks.extend(params.into_iter().map(|(eps, kind)| (n, eps, kind)));
    }
    tasks
        .par_iter()
        .map(|&(n, eps, kind)| {
            let start = Instant::now();
            let mut row = ReportRow::new("compress", &label, n, kind, eps);
            row.entropy_rate = Some(s);
            if !src.dense_feasible(n) {
                return row.skipped("dense_cap_exceeded");
            }
            let run = || -> qcomp_core::Result<_> {
                let scheme = make_scheme(src, n, SchemeMode::Epsilon(eps))?;
                let fe = entanglement_fidelity_kraus(&scheme.state, &scheme.round_trip)?;
                let fs = fs_bounds_with_spectrum(&scheme.state, &scheme.spectrum, &scheme.round_trip, scheme.rank())?;
                Ok((scheme, fe, fs))
            };
            let (scheme, fe, fs) = match run() {
                Ok(v) => v,
                Err(e) => return with_error(row, &e),
            };
            if let Some(hp) = &scheme.high_prob {
                row.beta = Some(hp.beta());
                row.beta_rate = Some(hp.beta() / n as f64);
                row.beta_qubits = Some(hp.qubits());
                row.high_prob_mass = Some(hp.mass);
            }
            row.rank_log2 = Some(scheme.rate_log2dim());
            row.rate = Some(scheme.rate());
            row.rate_qubits = Some(scheme.qubits() as u64);
            row.captured_mass = Some(scheme.captured_mass);
            row.fe = Some(fe);
            row.fe_bound = Some((1.0 - eps) * (1.0 - eps));
            row.fbar_eigen = Some(fs.lower);
            row.f_output = Some(fs.f_output);
            row.fs_lower = Some(fs.lower);
            row.fs_upper = Some(fs.upper);
            row.six_eta = Some(fs.six_eta);
            if fe < scheme.captured_mass * scheme.captured_mass - ROW_TOL {
                row.fail("fe_below_captured_mass_squared");
            }
            if fe < (1.0 - eps) * (1.0 - eps) - ROW_TOL {
                row.fail("fe_below_guaranteed_bound");
            }
            row.verify_bounds();
            row.wall_time_s = start.elapsed().as_secs_f64();
            row
        })
        .collect()
}

/// Rows per `(n, R)`: `6 eta_d` with `d = floor(2^(nR))` from the class
/// spectrum, plus the dense rate-mode scheme when feasible.
pub fn subrate(cfg: &ExperimentConfig, src: &SourceModel) -> Vec<ReportRow> {
    let label = cfg.source_label();
    let s = src.entropy_rate_exact();
    let rates = sorted(&cfg.target_rates);
    let tasks: Vec<(usize, f64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| rates.iter().map(move |&r| (n, r)))
        .collect();
    tasks
        .par_iter()
        .map(|&(n, r)| {
            let start = Instant::now();
            let mut row = ReportRow::new("subrate", &label, n, "rate", r);
            row.entropy_rate = Some(s);
            let full = BigUint::from(src.site_dim()).pow(n as u32);
            let d = floor_pow2(n as f64 * r).min(full);
            if d.is_zero() {
                return row.skipped("empty_subspace");
            }
            let spec = match src.class_spectrum(n) {
                Ok(spec) => spec,
                Err(e) => return with_error(row, &e),
            };
            let six_eta = match eta(&spec, &d) {
                Ok(e) => 6.0 * e,
                Err(e) => return with_error(row, &e),
            };
            row.rank_log2 = Some(log2_big(&d));
            row.rate = Some(log2_big(&d) / n as f64);
            row.rate_qubits = Some(qubits_for(&d));
            row.six_eta = Some(six_eta);
            if r >= s {
                row.warn("not_subrate");
            }
            if src.dense_feasible(n) {
                let run = || -> qcomp_core::Result<_> {
                    let scheme = make_scheme(src, n, SchemeMode::Rate(r))?;
                    let fe = entanglement_fidelity_kraus(&scheme.state, &scheme.round_trip)?;
                    let fs =
                        fs_bounds_with_spectrum(&scheme.state, &scheme.spectrum, &scheme.round_trip, scheme.rank())?;
                    Ok((scheme, fe, fs))
                };
                let (scheme, fe, fs) = match run() {
                    Ok(v) => v,
                    Err(e) => return with_error(row, &e),
                };
                row.captured_mass = Some(scheme.captured_mass);
                row.fe = Some(fe);
                row.fbar_eigen = Some(fs.lower);
                row.f_output = Some(fs.f_output);
                row.fs_lower = Some(fs.lower);
                row.fs_upper = Some(fs.upper);
                if BigUint::from(scheme.rank()) != d {
                    row.fail("rank_mismatch");
                }
                if fs.lower > six_eta + ROW_TOL {
                    row.fail("fbar_above_six_eta");
                }
            }
            row.verify_bounds();
            row.wall_time_s = start.elapsed().as_secs_f64();
            row
        })
        .collect()
}

/// `(x, y)` series from non-skipped rows with matching parameter.
pub fn series(rows: &[ReportRow], param: f64, y: impl Fn(&ReportRow) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.param == param)
        .filter_map(|r| y(r).map(|v| (r.n as f64, v)))
        .collect()
}

/// File-name fragment for a parameter value.
pub fn param_tag(x: f64) -> String {
    format_sig(x, 6)
}

pub struct ValidationOutcome {
    /// Set when the configured source itself is invalid.
    pub source_error: Option<String>,
    pub suites: Vec<SuiteReport>,
}

impl ValidationOutcome {
    pub fn passed(&self) -> bool {
        self.source_error.is_none() && self.suites.iter().all(SuiteReport::passed)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if let Some(e) = &self.source_error {
            lines.push(format!("FAIL source {e}"));
        }
        lines.extend(self.suites.iter().map(|s| s.to_string()));
        lines.push(format!("{} overall", if self.passed() { "PASS" } else { "FAIL" }));
        lines
    }

    pub fn csv(&self) -> std::io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "suite",
            "status",
            "trials",
            "skipped_cases",
            "check",
            "worst_slack",
            "tolerance",
            "samples",
            "error",
        ])?;
        if let Some(e) = &self.source_error {
            w.write_record(["source", "fail", "0", "0", "", "", "", "0", e.as_str()])?;
        }
        for suite in &self.suites {
            let status = match &suite.status {
                qcomp_core::validate::SuiteStatus::Pass => "pass".to_string(),
                qcomp_core::validate::SuiteStatus::Fail => "fail".to_string(),
                qcomp_core::validate::SuiteStatus::Skipped(r) => format!("skipped:{r}"),
            };
            let error = suite.error.clone().unwrap_or_default();
            let head = [
                suite.name.to_string(),
                status,
                suite.trials.to_string(),
                suite.skipped_cases.to_string(),
            ];
            if suite.checks.is_empty() {
                w.write_record(head.iter().cloned().chain([
                    String::new(),
                    String::new(),
                    String::new(),
                    "0".into(),
                    error.clone(),
                ]))?;
            }
            for c in &suite.checks {
                w.write_record(head.iter().cloned().chain([
                    c.name.to_string(),
                    format_sig(c.worst_slack, 12),
                    format_sig(c.tolerance, 12),
                    c.samples.to_string(),
                    error.clone(),
                ]))?;
            }
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))
    }
}

/// Every suite with the configured seed; an invalid source is reported as a
/// failure and the suites still run on the reference sources.
pub fn validate(cfg: &ExperimentConfig) -> ValidationOutcome {
    let (source, source_error) = match cfg.build_source() {
        Ok(src) => (Some(src), None),
        Err(e) => (None, Some(e.0)),
    };
    ValidationOutcome {
        source_error,
        suites: run_all(&cfg.validation_config(source)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SourceSpec;
    use crate::report::Status;

    fn config(source: SourceSpec, n_list: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            source,
            n_list,
            ..ExperimentConfig::default()
        }
    }

    fn iid(values: &[f64]) -> SourceSpec {
        SourceSpec::Iid {
            eigenvalues: Some(values.to_vec()),
            state: None,
            rotation: None,
        }
    }

    #[test]
    fn flat_source_beta_is_ceiling_count() {
        let mut cfg = config(iid(&[0.5, 0.5]), vec![1, 2, 3, 5, 8]);
        cfg.epsilon_list = vec![0.5];
        let rows = aep(&cfg, &cfg.build_source().unwrap());
        for row in rows {
            let expected = ((1u64 << (row.n - 1)) as f64).log2() / row.n as f64;
            assert!((row.beta_rate.unwrap() - expected).abs() < 1e-12);
            assert!(row.beta_rate.unwrap() < 1.0);
            assert_eq!(row.status, Status::Ok);
        }
    }

    #[test]
    fn pure_source_has_zero_rate() {
        let cfg = config(iid(&[1.0, 0.0]), vec![1, 4, 16]);
        for row in aep(&cfg, &cfg.build_source().unwrap()) {
            assert_eq!(row.beta_rate, Some(0.0));
            assert_eq!(row.entropy_rate, Some(0.0));
        }
    }

    #[test]
    fn compress_skips_beyond_dense_cap() {
        let mut cfg = config(iid(&[0.9, 0.1]), vec![2, 8, 20]);
        cfg.epsilon_list = vec![0.1];
        let rows = compress(&cfg, &cfg.build_source().unwrap());
        for row in &rows {
            if row.n == 20 {
                assert_eq!(row.reason.as_deref(), Some("dense_cap_exceeded"));
            } else {
                assert_eq!(row.status, Status::Ok, "{row:?}");
                assert!(row.fe.unwrap() >= row.fe_bound.unwrap() - ROW_TOL);
            }
        }
        let n8 = rows.iter().find(|r| r.n == 8 && r.param == 0.1).unwrap();
        assert!(n8.fe.unwrap() >= 0.81 && n8.rate.unwrap() < 1.0);
    }

    #[test]
    fn full_rate_is_flagged_not_subrate() {
        let mut cfg = config(iid(&[0.9, 0.1]), vec![4]);
        cfg.target_rates = vec![1.0];
        let rows = subrate(&cfg, &cfg.build_source().unwrap());
        assert_eq!(rows[0].status, Status::Warning);
        assert_eq!(rows[0].reason.as_deref(), Some("not_subrate"));
        assert!((rows[0].six_eta.unwrap() - 6.0).abs() < 1e-12);
        assert!((rows[0].fe.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_source_subrate_eta_closed_form() {
        let mut cfg = config(iid(&[0.5, 0.5]), vec![4, 8, 16, 40]);
        cfg.target_rates = vec![0.5];
        for row in subrate(&cfg, &cfg.build_source().unwrap()) {
            let n = row.n as i32;
            let expected = 6.0 * 2f64.powi(n / 2 - n);
            assert!((row.six_eta.unwrap() - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }
}
