use carnot_kit::estimates::*;
use carnot_kit::fields::{manufactured_h1, manufactured_r3, power_pair_r3};
use carnot_kit::harnack::harnack_scan;
use carnot_kit::quadrature::QuadratureBudget;

const RADII: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const SCAN: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

fn show(r: &EstimateReport) {
    for rec in &r.records {
        println!(
            "{:>18} {} R={:<4} lhs={:.4e} rhs={:.4e} margin={:.3e} se={:.2e} {:?}",
            rec.check_id, rec.line, rec.radius, rec.lhs, rec.rhs, rec.margin, rec.std_error, rec.verdict
        );
    }
}

fn run_chain(inst: SystemInstance) {
    let inst = inst.with_budget(QuadratureBudget::new(100_000, 42)).with_radii(RADII.to_vec());
    let settings = EstimateSettings::default();
    let consts = EstimateConstants::from_settings(&inst, &settings).unwrap();

    let ws = check_weak_solution(&inst, &default_battery(&inst, &RADII).unwrap()).unwrap();
    show(&ws);
    assert_eq!(ws.verdict, Verdict::Pass);
    let cacc = check_caccioppoli(&inst, &consts, &settings, &RADII).unwrap();
    show(&cacc);
    assert_eq!(cacc.verdict, Verdict::Pass);
    let prod = check_product_bound(&inst, &consts, &settings, &RADII).unwrap();
    show(&prod);
    assert_eq!(prod.verdict, Verdict::Pass);
    let av = check_averaged_bound(&inst, &consts, &RADII).unwrap();
    show(&av);
    assert_eq!(av.verdict, Verdict::Pass);

    let q = inst.hom_dim();
    let chain = check_power_mean_chain(&inst, &settings, chain_sigma(q, inst.p), chain_sigma(q, inst.q), &RADII).unwrap();
    show(&chain.averaged);
    show(&chain.power_mean);
    assert!(chain.implication_holds);
    assert_eq!(chain.power_mean.verdict, Verdict::Pass);

    let b = inst.budget.derived(900);
    let su = harnack_scan(&inst.group, &inst.norm, &inst.u, inst.p, Some(chain_sigma(q, inst.p)), &SCAN, &b).unwrap();
    let sv = harnack_scan(&inst.group, &inst.norm, &inst.v, inst.q, Some(chain_sigma(q, inst.q)), &SCAN, &b).unwrap();
    println!("c_H u = {} v = {}", su.empirical_c_h, sv.empirical_c_h);
    let inf = check_infimum_bound(&inst, &settings, &su, &sv, &RADII).unwrap();
    show(&inf);
    assert_eq!(inf.verdict, Verdict::Pass);
}

#[test]
fn chain_on_manufactured_r3() {
    run_chain(manufactured_r3().unwrap());
}

#[test]
fn chain_on_manufactured_h1() {
    run_chain(manufactured_h1().unwrap());
}

#[test]
fn large_radius_on_power_pair() {
    let inst = power_pair_r3(0.5).unwrap().with_budget(QuadratureBudget::new(50_000, 5));
    let settings = EstimateSettings::default();
    let q = inst.hom_dim();
    let b = inst.budget.derived(900);
    let scan: Vec<f64> = (0..9).map(|k| 2f64.powi(k)).collect();
    let su = harnack_scan(&inst.group, &inst.norm, &inst.u, 2.0, Some(chain_sigma(q, 2.0)), &scan, &b).unwrap();
    let sv = harnack_scan(&inst.group, &inst.norm, &inst.v, 2.0, Some(chain_sigma(q, 2.0)), &scan, &b).unwrap();
    let rep = check_large_radius(&inst, &settings, &su, &sv, &[1.0, 4.0, 16.0, 64.0, 256.0]).unwrap();
    show(&rep);
    println!("{:?} {:?}", rep.parameters, rep.notes);
    assert_eq!(rep.verdict, Verdict::Pass);
}
