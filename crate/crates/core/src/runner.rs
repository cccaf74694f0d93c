//! Executes the checks of a `RunConfig` in dependency order. Independent
//! checks share a thread pool of `jobs` workers; every check draws from its
//! own tagged seed, so results do not depend on scheduling.

use rayon::prelude::*;

use crate::config::{RunConfig, CHECK_CLASSIFY, CHECK_COUNTEREXAMPLE, CHECK_DENSITY, CHECK_HARNACK, CHECK_LIOUVILLE};
use crate::error::{Error, Result};
use crate::estimates::*;
use crate::harnack::{density_limit, harnack_scan, HarnackScan};
use crate::liouville::{classify_system, evaluate_condition};
use crate::quadrature::derive_seed;
use crate::report::{CheckDetail, CheckResult, RunReport};
use crate::sharpness::{definitive_claim, search_counterexample};

const TAG_SCAN_U: u64 = 900;
const TAG_SCAN_V: u64 = 901;
const TAG_DENSITY: u64 = 902;
const TAG_SEARCH: u64 = 903;

const ANCHOR_HARNACK: &str = "weak Harnack: (⨍_{B_R} u^σ)^{1/σ} ≤ c_H ess inf_{B_{R/2}} u for nonnegative supersolutions";
const ANCHOR_DENSITY: &str = "ess inf u = 0 forces |B_R ∩ {u < ε}| / |B_R| → 1";
const ANCHOR_CLASSIFY: &str = "nonexistence route selection for declared source shapes";
const ANCHOR_COUNTEREXAMPLE: &str = "radial counterexample search where the power condition fails";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Task {
    Liouville,
    Classify,
    WeakForm,
    Energy,
    Product,
    Averaged,
    PowerMean,
    Scans,
    Density,
    Counterexample,
}

/// The scans both lines need, shared by the harnack check and the checks
/// built on an empirical c_H.
struct Scans {
    u: HarnackScan,
    v: HarnackScan,
}

fn estimate(rep: EstimateReport) -> CheckResult {
    CheckResult {
        check: rep.check_id.clone(),
        anchor: rep.anchor.clone(),
        verdict: rep.verdict,
        detail: CheckDetail::Estimate(rep),
    }
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.jobs)))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<RunReport> {
    let g = config.group.build()?;
    let norm = config.norm.build(&g);
    let radii = config.radii.clone();
    let settings = &config.estimates;

    let wants_estimates = [ID_WEAK_FORM, ID_ENERGY, ID_PRODUCT, ID_AVERAGED, ID_POWER_MEAN, ID_INFIMUM, ID_LARGE_RADIUS]
        .iter()
        .any(|c| config.wants(c));
    let needs_scans = config.wants(CHECK_HARNACK) || config.wants(ID_INFIMUM) || config.wants(ID_LARGE_RADIUS);
    let inst = if wants_estimates || needs_scans || config.wants(CHECK_DENSITY) {
        Some(config.instance()?)
    } else {
        None
    };
    // Constant preconditions (c1 > 0, α < 0) are settled before any sampling.
    let consts = match (&inst, wants_estimates) {
        (Some(i), true) => Some(EstimateConstants::from_settings(i, settings)?),
        _ => None,
    };
    let need_inst = || inst.as_ref().ok_or_else(|| Error::Config("missing [system] table".into()));

    let mut tasks = Vec::new();
    for (name, task) in [
        (CHECK_LIOUVILLE, Task::Liouville),
        (CHECK_CLASSIFY, Task::Classify),
        (ID_WEAK_FORM, Task::WeakForm),
        (ID_ENERGY, Task::Energy),
        (ID_PRODUCT, Task::Product),
        (ID_AVERAGED, Task::Averaged),
        (ID_POWER_MEAN, Task::PowerMean),
        (CHECK_DENSITY, Task::Density),
        (CHECK_COUNTEREXAMPLE, Task::Counterexample),
    ] {
        if config.wants(name) {
            tasks.push(task);
        }
    }
    if needs_scans {
        tasks.push(Task::Scans);
    }

    enum Done {
        Check(CheckResult),
        Scans(Scans),
    }
    let done: Vec<Done> = tasks
        .par_iter()
        .map(|task| -> Result<Done> {
            let check = match task {
                Task::Liouville => {
                    let v = evaluate_condition(&config.liouville_inputs(&g)?, config.liouville.form)?;
                    CheckResult {
                        check: CHECK_LIOUVILLE.into(),
                        anchor: v.formula.clone(),
                        verdict: Verdict::Pass,
                        detail: CheckDetail::Liouville(v),
                    }
                }
                Task::Classify => {
                    let d = config.classify.as_ref().expect("validated");
                    CheckResult {
                        check: CHECK_CLASSIFY.into(),
                        anchor: ANCHOR_CLASSIFY.into(),
                        verdict: Verdict::Pass,
                        detail: CheckDetail::Classify(classify_system(d)?),
                    }
                }
                Task::WeakForm => {
                    let i = need_inst()?;
                    estimate(check_weak_solution(i, &default_battery(i, &radii)?)?)
                }
                Task::Energy => estimate(check_caccioppoli(need_inst()?, consts.as_ref().unwrap(), settings, &radii)?),
                Task::Product => estimate(check_product_bound(need_inst()?, consts.as_ref().unwrap(), settings, &radii)?),
                Task::Averaged => estimate(check_averaged_bound(need_inst()?, consts.as_ref().unwrap(), &radii)?),
                Task::PowerMean => {
                    let i = need_inst()?;
                    let (sigma, delta) = chain_exponents(config, i);
                    let chain = check_power_mean_chain(i, settings, sigma, delta, &radii)?;
                    let mut rep = chain.power_mean;
                    rep.notes.push(format!(
                        "averaged bound at the same weights: {:?}; averaged pass implies power-mean pass: {}",
                        chain.averaged.verdict, chain.implication_holds
                    ));
                    if !chain.implication_holds {
                        rep.verdict = Verdict::Violation;
                    }
                    estimate(rep)
                }
                Task::Density => {
                    let i = need_inst()?;
                    let (w, name) = match (i.inf_u, i.inf_v) {
                        (Some(z), _) if z == 0.0 => (&i.u, "u"),
                        (_, Some(z)) if z == 0.0 => (&i.v, "v"),
                        _ => {
                            return Err(Error::Precondition(
                                "density scan needs inf_u = 0 or inf_v = 0 declared in [system]".into(),
                            ))
                        }
                    };
                    let budget = harnack_budget(config).derived(TAG_DENSITY);
                    let mut d = density_limit(&g, &norm, w, config.harnack.density_epsilon, &config.harnack.radii, &budget)?;
                    d.field = format!("{name}: {}", d.field);
                    CheckResult {
                        check: CHECK_DENSITY.into(),
                        anchor: ANCHOR_DENSITY.into(),
                        verdict: Verdict::Pass,
                        detail: CheckDetail::Density(d),
                    }
                }
                Task::Counterexample => {
                    let li = config.liouville_inputs(&g)?;
                    let [p, q, a, b] = [&li.p, &li.q, &li.a, &li.b].map(|n| n.to_f64());
                    let seed = derive_seed(config.seed, TAG_SEARCH);
                    let mut rep = search_counterexample(&g, &norm, p, q, a, b, &config.sharpness, seed)?;
                    let verdict = match definitive_claim(&rep.liouville, Some(&rep)) {
                        Ok(claim) => {
                            rep.notes.push(format!("claim: {claim:?}"));
                            Verdict::Pass
                        }
                        Err(e) => {
                            rep.notes.push(e.to_string());
                            Verdict::Violation
                        }
                    };
                    CheckResult {
                        check: CHECK_COUNTEREXAMPLE.into(),
                        anchor: ANCHOR_COUNTEREXAMPLE.into(),
                        verdict,
                        detail: CheckDetail::Counterexample(rep),
                    }
                }
                Task::Scans => return Ok(Done::Scans(scans(config, need_inst()?)?)),
            };
            Ok(Done::Check(check))
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::new();
    let mut shared = None;
    for d in done {
        match d {
            Done::Check(c) => results.push(c),
            Done::Scans(s) => shared = Some(s),
        }
    }

    if let Some(s) = &shared {
        let i = need_inst()?;
        let mut late = Vec::new();
        if config.wants(ID_INFIMUM) {
            late.push(estimate(check_infimum_bound(i, settings, &s.u, &s.v, &radii)?));
        }
        if config.wants(ID_LARGE_RADIUS) {
            late.push(estimate(check_large_radius(i, settings, &s.u, &s.v, &radii)?));
        }
        if config.wants(CHECK_HARNACK) {
            let finite = |h: &HarnackScan| h.empirical_c_h.is_finite() && h.empirical_c_h > 0.0;
            results.push(CheckResult {
                check: CHECK_HARNACK.into(),
                anchor: ANCHOR_HARNACK.into(),
                verdict: if finite(&s.u) && finite(&s.v) {
                    Verdict::Pass
                } else {
                    Verdict::Inconclusive
                },
                detail: CheckDetail::Harnack {
                    u: s.u.clone(),
                    v: s.v.clone(),
                },
            });
        }
        results.extend(late);
    }

    // Report order follows the list of known checks, not completion order.
    let rank = |c: &CheckResult| crate::config::CHECK_NAMES.iter().position(|n| *n == c.check).unwrap_or(usize::MAX);
    results.sort_by_key(rank);
    Ok(RunReport::new(config.clone(), results))
}

fn chain_exponents(config: &RunConfig, inst: &SystemInstance) -> (f64, f64) {
    let q_dim = inst.hom_dim();
    (
        config.estimates.sigma.unwrap_or_else(|| chain_sigma(q_dim, inst.p)),
        config.estimates.delta.unwrap_or_else(|| chain_sigma(q_dim, inst.q)),
    )
}

fn harnack_budget(config: &RunConfig) -> crate::quadrature::QuadratureBudget {
    let b = config.base_budget();
    match config.harnack.samples {
        Some(n) => b.with_samples(n),
        None => b,
    }
}

fn scans(config: &RunConfig, inst: &SystemInstance) -> Result<Scans> {
    let (cs, cd) = chain_exponents(config, inst);
    let sigma_u = config.harnack.sigma_u.unwrap_or(cs);
    let sigma_v = config.harnack.sigma_v.unwrap_or(cd);
    let b = harnack_budget(config);
    let r = &config.harnack.radii;
    let (u, v) = rayon::join(
        || harnack_scan(&inst.group, &inst.norm, &inst.u, inst.p, Some(sigma_u), r, &b.derived(TAG_SCAN_U)),
        || harnack_scan(&inst.group, &inst.norm, &inst.v, inst.q, Some(sigma_v), r, &b.derived(TAG_SCAN_V)),
    );
    Ok(Scans { u: u?, v: v? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::ExitStatus;

    fn minimal(seed: u64) -> RunConfig {
        RunConfig::from_toml(&format!(
            r#"
seed = {seed}
checks = ["weak_form", "caccioppoli", "liouville"]
radii = [1.0, 2.0]

[group]
kind = "euclidean"
dim = 3

[budget]
samples = 4000

[system]
p = 2
q = 2
a = 1
b = 1
u = {{ name = "constant", c = 1.0 }}
v = {{ name = "constant", c = 1.0 }}
"#
        ))
        .unwrap()
    }

    #[test]
    fn minimal_run_passes_and_is_reproducible() {
        let a = run(&minimal(3)).unwrap();
        assert_eq!(a.status, ExitStatus::Pass, "{}", a.to_json().unwrap());
        assert_eq!(a.checks.iter().map(|c| c.check.as_str()).collect::<Vec<_>>(), [ID_WEAK_FORM, ID_ENERGY, CHECK_LIOUVILLE]);
        let b = run(&minimal(3)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let mut two = minimal(3);
        two.jobs = 2;
        let c = run(&two).unwrap();
        assert_eq!(a.checks, c.checks);
    }

    #[test]
    fn bad_weights_are_rejected_before_sampling() {
        let mut c = minimal(1);
        c.estimates.alpha = 0.5;
        assert!(matches!(run(&c), Err(Error::Precondition(_))));
    }
}
