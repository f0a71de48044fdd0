use branchsurv::coop::{coupled_step, exact_joint_law, JointBudget};
use branchsurv::galton_watson::{
    certificate_search, extinction_probability, simulate_batch, ExactBudget, SimulationConfig,
};
use branchsurv::rng::cell_stream;
use branchsurv::{CoopParams, CoopState, OffspringLaw};
use rand::Rng;

#[test]
fn mc_extinction_matches_pgf_fixed_point() {
    let config = SimulationConfig::default();
    for (i, q) in [0.55, 0.6, 0.75, 0.9].into_iter().enumerate() {
        let law = OffspringLaw::binomial(2, q).unwrap();
        let oracle = extinction_probability(&law, 1e-13).unwrap();
        let batch = simulate_batch(1, &law, &config, 100_000, 1000 + i as u64);
        let extinct = batch.extinct as f64 / batch.trials as f64;
        let se = (oracle * (1.0 - oracle) / batch.trials as f64).sqrt();
        assert!(
            (extinct - oracle).abs() <= 3.0 * se,
            "q = {q}: mc {extinct}, oracle {oracle}, se {se}"
        );
    }
}

#[test]
fn certificates_exist_exactly_above_criticality() {
    let budget = ExactBudget::default();
    for i in 0..=8 {
        let q = 0.55 + 0.05 * f64::from(i);
        let law = OffspringLaw::binomial(2, q).unwrap();
        let c = certificate_search(&law, 16, 16, &budget).unwrap();
        assert!(c.is_some(), "q = {q}");
    }
    for q in [0.1, 0.3, 0.45, 0.5] {
        let law = OffspringLaw::binomial(2, q).unwrap();
        assert!(certificate_search(&law, 16, 16, &budget).unwrap().is_none(), "q = {q}");
    }
}

#[test]
fn exact_one_step_survival_matches_mc() {
    let params = CoopParams::new(0.8, 0.8).unwrap();
    let law = exact_joint_law(1, 1, &params, &JointBudget::default()).unwrap();
    let exact: f64 = law.iter().filter(|(s, _)| s.z() >= 1).map(|(_, p)| p).sum();
    let trials = 200_000u64;
    let mut hits = 0u64;
    for t in 0..trials {
        let mut rng = cell_stream(5, 0, 0, t);
        let s = branchsurv::coop::coop_step(CoopState::new(1, 1), &params, &mut rng);
        hits += u64::from(s.z() >= 1);
    }
    let freq = hits as f64 / trials as f64;
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((freq - exact).abs() <= 4.0 * sigma, "{freq} vs {exact}");
}

#[test]
fn coupled_trajectories_are_ordered() {
    let lo = CoopParams::new(0.6, 0.45).unwrap();
    let hi = CoopParams::new(0.75, 0.5).unwrap();
    for t in 0..1000 {
        let mut rng = cell_stream(99, 0, 0, t);
        let (mut a, mut b) = (CoopState::new(1, 1), CoopState::new(1, 1));
        for _ in 0..60 {
            let (ux, uy): (f64, f64) = (rng.random(), rng.random());
            a = coupled_step(a, &lo, ux, uy);
            b = coupled_step(b, &hi, ux, uy);
            assert!(a.x <= b.x && a.y <= b.y, "trial {t}");
            if b.z() == 0 || b.x > 1_000_000 {
                break;
            }
        }
    }
}
