use torusforge::averaging::lyapunov_on;
use torusforge::criteria::{evaluate_base_criteria, evaluate_perturbation_criteria, HopfZeroSystem, PerturbationFamily};
use torusforge::flow::IntegratorConfig;
use torusforge::torus::{certify_torus, TorusCertificate, TorusConfig, Verdict};

fn run(cfg: &TorusConfig) -> TorusCertificate {
    let sys = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
    let base = evaluate_base_criteria(&sys).unwrap();
    let fam = PerturbationFamily::simple(base.beta);
    let pc = evaluate_perturbation_criteria(&sys, &fam, [-0.5, 0.5]).unwrap();
    let eps = 0.05;
    let ly = lyapunov_on(&sys, &fam, pc.mu0, vec![eps, eps / 2.0, eps / 4.0], &IntegratorConfig::tight()).unwrap();
    // l11 vanishes identically for this family
    certify_torus(&sys, &fam, 0.05, eps, ly.l12, Some(ly.mu[0]), cfg).unwrap()
}

#[test]
fn doubling_the_iterates_keeps_the_certificate() {
    let cfg = TorusConfig { seeds: 8, ..TorusConfig::default() };
    let a = run(&cfg);
    let b = run(&cfg.doubled());
    assert_eq!(a.verdict, Verdict::TorusFound);
    assert_eq!(b.verdict, Verdict::TorusFound);
    let (ra, rb) = (a.rotation.unwrap().rho, b.rotation.unwrap().rho);
    assert!((ra - rb).abs() <= 1e-4, "rho {ra} vs {rb}");
    let (ea, eb) = (a.relative_residual.unwrap(), b.relative_residual.unwrap());
    assert!(eb <= 2.0 * ea.max(1e-9), "residual {ea:e} -> {eb:e}");

    // contraction one way is expansion the other way
    let (kf, kr) = (a.kappa_forward.unwrap(), a.kappa_reversed.unwrap());
    assert!((kf * kr - 1.0).abs() < 0.05, "kappa {kf} * {kr}");
}
