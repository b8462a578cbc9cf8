//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use qcomp_core::channel::{make_scheme, SchemeMode};
use qcomp_core::fidelity::{ensemble_fidelity, entanglement_fidelity_kraus, Ensemble};
use qcomp_core::source::reference_chain;
use qcomp_core::typicality::{beta, eta};
use qcomp_core::validate::{
    suite_beta_eta, suite_consistency, suite_fidelity, suite_relative_entropy, suite_spectra, SuiteReport,
    ValidationConfig,
};
use qcomp_core::{floor_pow2, ComplexMatrix, DensityOperator, SourceModel};

struct Verdict {
    id: u32,
    title: &'static str,
    clauses: Vec<(String, bool)>,
    elapsed: Duration,
    budget: Option<Duration>,
}

impl Verdict {
    /// `budget_s` is the stated runtime limit, if the criterion has one.
    fn new(id: u32, title: &'static str, budget_s: Option<u64>) -> Self {
        Self {
            id,
            title,
            clauses: Vec::new(),
            elapsed: Duration::ZERO,
            budget: budget_s.map(Duration::from_secs),
        }
    }

    fn clause(&mut self, ok: bool, text: String) {
        self.clauses.push((text, ok));
    }

    fn passed(&self) -> bool {
        self.clauses.iter().all(|(_, ok)| *ok) && self.budget.is_none_or(|b| self.elapsed <= b)
    }

    fn print(&self) {
        let budget = self
            .budget
            .map_or(String::new(), |b| format!(", budget {}s", b.as_secs()));
        println!(
            "{} criterion {}: {} ({:.2}s{budget})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
        );
        for (text, ok) in &self.clauses {
            println!("    [{}] {text}", if *ok { "ok" } else { "FAIL" });
        }
    }
}

fn timed(mut v: Verdict, body: impl FnOnce(&mut Verdict)) -> Verdict {
    let start = Instant::now();
    body(&mut v);
    v.elapsed = start.elapsed();
    v
}

fn iid_09() -> SourceModel {
    SourceModel::iid(DensityOperator::diagonal(&[0.9, 0.1]).unwrap())
}

/// Every named check must be present and meet the pinned tolerance.
fn suite_clauses(v: &mut Verdict, report: &SuiteReport, pinned: &[(&str, f64)], min_trials: usize) {
    v.clause(
        report.error.is_none() && report.trials >= min_trials,
        format!(
            "{}: trials {} >= {min_trials}, error {:?}",
            report.name, report.trials, report.error
        ),
    );
    for &(name, tol) in pinned {
        match report.checks.iter().find(|c| c.name == name) {
            Some(c) => v.clause(
                c.worst_slack >= -tol && c.samples > 0,
                format!(
                    "{name}: worst slack {:.3e} >= -{tol:e} over {} samples",
                    c.worst_slack, c.samples
                ),
            ),
            None => v.clause(false, format!("{name}: check missing")),
        }
    }
}

fn criterion_1() -> Verdict {
    const S: f64 = 0.46900;
    const TOL: f64 = 0.05;
    const SPREAD: f64 = 0.02;
    let v = Verdict::new(1, "beta/n convergence for IID diag(0.9,0.1) at n=1000", Some(5));
    timed(v, |v| {
        let spec = iid_09().class_spectrum(1000).unwrap();
        let mut rates = Vec::new();
        for eps in [0.01, 0.1, 0.3] {
            let rate = beta(&spec, eps).unwrap().beta() / 1000.0;
            rates.push(rate);
            v.clause(
                (rate - S).abs() <= TOL,
                format!(
                    "eps={eps}: beta/n = {rate:.6}, |beta/n - {S}| = {:.6} <= {TOL}",
                    (rate - S).abs()
                ),
            );
        }
        let spread = rates.iter().cloned().fold(f64::MIN, f64::max) - rates.iter().cloned().fold(f64::MAX, f64::min);
        v.clause(spread <= SPREAD, format!("spread across eps = {spread:.6} <= {SPREAD}"));
    })
}

fn criterion_2() -> Verdict {
    const TOL: f64 = 0.15;
    let v = Verdict::new(2, "beta/n for the rotated Markov reference source", Some(30));
    timed(v, |v| {
        let src = SourceModel::rotated_markov(reference_chain(), ComplexMatrix::hadamard()).unwrap();
        let s = src.entropy_rate_exact();
        let dev = |n: usize| {
            let spec = src.word_spectrum(n).unwrap();
            (beta(&spec, 0.1).unwrap().beta() / n as f64 - s).abs()
        };
        let (d6, d20) = (dev(6), dev(20));
        v.clause((s - 0.55750).abs() < 5e-6, format!("exact s = {s:.8}"));
        v.clause(d20 <= TOL, format!("|beta/20 - s| = {d20:.8} <= {TOL}"));
        v.clause(
            d20 < d6,
            format!("deviation at n=20 ({d20:.8}) < deviation at n=6 ({d6:.8})"),
        );
    })
}

fn criterion_3() -> Verdict {
    const EPS: f64 = 0.1;
    const SLACK: f64 = 1e-9;
    let v = Verdict::new(3, "epsilon-mode scheme for IID diag(0.9,0.1), n=8", Some(10));
    timed(v, |v| {
        let scheme = make_scheme(&iid_09(), 8, SchemeMode::Epsilon(EPS)).unwrap();
        let fe = entanglement_fidelity_kraus(&scheme.state, &scheme.round_trip).unwrap();
        let bound = (1.0 - EPS) * (1.0 - EPS);
        let mass = scheme.captured_mass;
        v.clause(fe >= bound, format!("F_e = {fe:.10} >= (1-eps)^2 = {bound}"));
        v.clause(
            fe >= mass * mass - SLACK,
            format!("F_e >= (tr rho P)^2 - {SLACK:e} = {:.10}", mass * mass - SLACK),
        );
        v.clause(
            scheme.rate() < 1.0,
            format!("rate log2({})/8 = {:.6} < 1", scheme.rank(), scheme.rate()),
        );
    })
}

fn criterion_4() -> Verdict {
    const RATE: f64 = 0.25;
    const TARGET: f64 = 0.01;
    let v = Verdict::new(4, "6 eta decay below the entropy rate, R = 0.25", Some(10));
    timed(v, |v| {
        let src = iid_09();
        let mut six_eta = Vec::new();
        for n in [50usize, 100, 200, 400] {
            let spec = src.class_spectrum(n).unwrap();
            let d: BigUint = floor_pow2(n as f64 * RATE);
            six_eta.push((n, 6.0 * eta(&spec, &d).unwrap()));
        }
        let last = six_eta.last().unwrap().1;
        v.clause(last <= TARGET, format!("6 eta at n=400 = {last:.6e} <= {TARGET}"));
        v.clause(
            six_eta.windows(2).all(|w| w[1].1 < w[0].1),
            format!(
                "strictly decreasing over n: {:?}",
                six_eta.iter().map(|(n, e)| format!("{n}:{e:.4e}")).collect::<Vec<_>>()
            ),
        );
        let mut fbar = Vec::new();
        for n in [6usize, 8, 10] {
            let scheme = make_scheme(&src, n, SchemeMode::Rate(RATE)).unwrap();
            let ens = Ensemble::from_spectrum(&scheme.spectrum).unwrap();
            fbar.push((n, ensemble_fidelity(&ens, &scheme.round_trip).unwrap()));
        }
        v.clause(
            fbar.windows(2).all(|w| w[1].1 < w[0].1),
            format!(
                "dense F_bar_eigen strictly decreasing: {:?}",
                fbar.iter().map(|(n, f)| format!("{n}:{f:.6}")).collect::<Vec<_>>()
            ),
        );
    })
}

fn criterion_5() -> Verdict {
    let v = Verdict::new(5, "fidelity identities on 1000 random triples", Some(60));
    timed(v, |v| {
        let cfg = ValidationConfig {
            fidelity_trials: 1000,
            ..ValidationConfig::default()
        };
        let report = suite_fidelity(&cfg);
        suite_clauses(
            v,
            &report,
            &[
                ("trace_distance_bounds", 1e-9),
                ("fe_fbar_f_chain", 1e-9),
                ("fe_kraus_vs_purification", 1e-8),
                ("kraus_completeness", 1e-10),
                ("fidelity_monotone_under_channel", 1e-9),
                ("fidelity_joint_concavity", 1e-9),
            ],
            1000,
        );
    })
}

fn criterion_6() -> Verdict {
    let v = Verdict::new(6, "structured vs dense spectra and beta/eta oracles", None);
    timed(v, |v| {
        let cfg = ValidationConfig {
            spectrum_n_max: 8,
            beta_trials: 50,
            ..ValidationConfig::default()
        };
        let spectra = suite_spectra(&cfg);
        suite_clauses(v, &spectra, &[("class_vs_dense_eigenvalues", 1e-9)], 1);
        v.clause(
            spectra.skipped_cases == 0,
            format!("dense cases skipped: {}", spectra.skipped_cases),
        );
        let oracles = suite_beta_eta(&cfg);
        suite_clauses(
            v,
            &oracles,
            &[("greedy_beta_minimal", 0.0), ("eta_vs_subset_max", 1e-12)],
            50,
        );
    })
}

fn criterion_7() -> Verdict {
    let v = Verdict::new(7, "partial-trace consistency for n <= 7", None);
    timed(v, |v| {
        let cfg = ValidationConfig {
            consistency_n_max: 7,
            ..ValidationConfig::default()
        };
        let report = suite_consistency(&cfg);
        suite_clauses(v, &report, &[("partial_trace_residual", 1e-10)], 1);
        v.clause(
            report.skipped_cases == 0,
            format!("cases skipped: {}", report.skipped_cases),
        );
    })
}

fn criterion_8() -> Verdict {
    let v = Verdict::new(8, "relative-entropy monotonicity on 200 triples", None);
    timed(v, |v| {
        let cfg = ValidationConfig {
            monotonicity_trials: 200,
            ..ValidationConfig::default()
        };
        let report = suite_relative_entropy(&cfg);
        suite_clauses(v, &report, &[("relative_entropy_monotone", 1e-9)], 200);
    })
}

fn main() -> ExitCode {
    let verdicts = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    for v in &verdicts {
        v.print();
    }
    let failed = verdicts.iter().filter(|v| !v.passed()).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
