use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use torusforge::averaging::loglog_slope;
use torusforge::criteria::{evaluate_base_criteria, omega_exact, validate_hopf_zero, HopfZeroSystem};
use torusforge::expr::{jet, parse_field, Monomial, Poly};
use torusforge::flow::{integrate, IntegratorConfig};
use torusforge::lift::substitute;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn term() -> impl Strategy<Value = (Monomial, BigRational)> {
    (prop::array::uniform5(0u32..4), -60i64..60, 1i64..25).prop_map(|(m, n, d)| (m, rat(n, d)))
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(term(), 0..8).prop_map(|ts| {
        let mut p = Poly::zero();
        for (m, c) in ts {
            p.add_term(m, c);
        }
        p
    })
}

fn space_poly(min_degree: u32) -> impl Strategy<Value = Poly> {
    let t = (prop::array::uniform3(0u32..4), -9i64..10, 1i64..6);
    prop::collection::vec(t, 0..7).prop_map(move |ts| {
        let mut p = Poly::zero();
        for ([i, j, k], n, d) in ts {
            if i + j + k >= min_degree {
                p.add_term([i, j, k, 0, 0], rat(n, d));
            }
        }
        p
    })
}

fn system() -> impl Strategy<Value = HopfZeroSystem> {
    [space_poly(2), space_poly(2), space_poly(2)]
        .prop_map(|[p, q, r]| validate_hopf_zero(p.to_expr(), q.to_expr(), r.to_expr()).unwrap())
}

/// `(x, y) -> (c x - s y, s x + c y)` applied to the field.
fn rotate(sys: &HopfZeroSystem, c: &BigRational, s: &BigRational) -> HopfZeroSystem {
    let lin = |a: &BigRational, b: &BigRational| {
        let mut p = Poly::zero();
        p.add_term([1, 0, 0, 0, 0], a.clone());
        p.add_term([0, 1, 0, 0, 0], b.clone());
        p
    };
    let back = [lin(c, s), lin(&-s.clone(), c), Poly::monomial([0, 0, 1, 0, 0], rat(1, 1))];
    let [p, q, r] = [0, 1, 2].map(|i| substitute(&sys.polys[i], &back));
    let (cs, ss) = (Poly::constant(c.clone()), Poly::constant(s.clone()));
    let p2 = cs.mul(&p).sub(&ss.mul(&q));
    let q2 = ss.mul(&p).add(&cs.mul(&q));
    validate_hopf_zero(p2.to_expr(), q2.to_expr(), r.to_expr()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_polynomials_parse_back(p in poly()) {
        let text = p.to_expr().to_string();
        let back = Poly::from_expr(&parse_field(&text).unwrap());
        prop_assert_eq!(back, p, "{}", text);
    }

    #[test]
    fn jet_of_product_is_truncated_product(f in space_poly(0), g in space_poly(0)) {
        prop_assert_eq!(jet(&f.mul(&g)), jet(&f).product(&jet(&g)));
    }

    #[test]
    fn omega_is_rotation_invariant(sys in system(), k in 0usize..4) {
        let (a, b, h) = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (-20, 21, 29)][k];
        let rotated = rotate(&sys, &rat(a, h), &rat(b, h));
        prop_assert_eq!(omega_exact(&rotated), omega_exact(&sys));
    }

    #[test]
    fn criteria_are_deterministic(sys in system()) {
        let a = evaluate_base_criteria(&sys);
        let b = evaluate_base_criteria(&sys);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.l1_exact, b.l1_exact);
                prop_assert_eq!(a.l1.to_bits(), b.l1.to_bits());
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "outcome changed between runs"),
        }
    }
}

#[test]
fn integrator_converges_at_fifth_order() {
    // y' = y cos t has y = exp(sin t); dyadic steps land exactly on t = 2
    let hs = [0.25, 0.125, 0.0625, 0.03125];
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let cfg = IntegratorConfig {
                atol: 1e6,
                rtol: 1e6,
                max_step: h,
                ..IntegratorConfig::default()
            };
            let tr = integrate(|t, y, d| d[0] = y[0] * t.cos(), 0.0, &[1.0], 2.0, &cfg).unwrap();
            (tr.final_state()[0] - 2f64.sin().exp()).abs()
        })
        .collect();
    let slope = loglog_slope(&hs, &errs);
    assert!((slope - 5.0).abs() < 0.5, "slope {slope}, errors {errs:?}");
}
