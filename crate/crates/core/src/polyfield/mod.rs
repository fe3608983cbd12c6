//! Exact calculus for vector fields on the open orthant `(0, inf)^n` whose
//! coefficients are finite sums `p_m(phi) / y(phi)^m`, `y = 1 + sum phi_i`.
//!
//! This class is closed under differentiation because `d y / d phi_j = 1`,
//! so brackets of the likelihood-coordinate fields never leave it.

mod coeff;
mod field;
mod poly;

pub use coeff::RationalCoefficient;
pub use field::{fields_equal, lie_bracket, lie_bracket_guarded, FieldError, VectorField, DEFAULT_DEGREE_GUARD};
pub use poly::MultiPoly;

use num_traits::Zero;

use crate::exact::{ratio, Rational};
use crate::model::{DriftGeometry, ModelSpec};

/// Diffusion fields `D_r = sum_i a_{ir} phi_i d/dphi_i`, r = 1..k.
pub fn build_diffusion_fields(geom: &DriftGeometry) -> Vec<VectorField> {
    let n = geom.n;
    (0..geom.k)
        .map(|r| {
            let comps =
                (0..n).map(|i| RationalCoefficient::from_poly(MultiPoly::var(n, i).scale(&geom.a[r][i]))).collect();
            VectorField::new(comps, format!("D_{}", r + 1))
        })
        .collect()
}

/// Drift of the testing-case generator,
/// `(D_0)_i = phi_i ( (1/y) sum_l Sigma_{li} phi_l - |a_i|^2 / 2 )`.
pub fn build_testing_drift(geom: &DriftGeometry) -> VectorField {
    let n = geom.n;
    let half = ratio(1, 2);
    let comps = (0..n)
        .map(|i| {
            let phi_i = MultiPoly::var(n, i);
            let coupling =
                (0..n).fold(MultiPoly::zero(n), |acc, l| &acc + &MultiPoly::var(n, l).scale(&geom.sigma[l][i]));
            let rational = RationalCoefficient::with_y_power(&phi_i * &coupling, 1);
            let linear = RationalCoefficient::from_poly(phi_i.scale(&(-&geom.sqnorms[i] * &half)));
            &rational + &linear
        })
        .collect();
    VectorField::new(comps, "D_0")
}

/// Jump field `J_j = sum_{i=0}^n (q_{ij} - q_{i0} phi_j) phi_i` with `phi_0 = 1`.
pub fn build_jump_field(spec: &ModelSpec) -> VectorField {
    let n = spec.n;
    let q = &spec.q;
    let comps = (1..=n)
        .map(|j| {
            let phi_j = MultiPoly::var(n, j - 1);
            let mut p = MultiPoly::constant(n, q[0][j].clone());
            p = &p - &phi_j.scale(&q[0][0]);
            for m in 1..=n {
                let phi_m = MultiPoly::var(n, m - 1);
                p = &p + &phi_m.scale(&q[m][j]);
                p = &p - &(&phi_j * &phi_m).scale(&q[m][0]);
            }
            RationalCoefficient::from_poly(p)
        })
        .collect();
    VectorField::new(comps, "J")
}

/// `D_0^J = D_0 + J`, the full drift field of the likelihood generator.
pub fn build_drift(spec: &ModelSpec, geom: &DriftGeometry) -> VectorField {
    let d0 = build_testing_drift(geom);
    if spec.is_testing() {
        return d0;
    }
    d0.add(&build_jump_field(spec)).expect("drift and jump share a space").relabeled("D_0^J")
}

/// Exact evaluation at a point of the open orthant.
pub fn evaluate(field: &VectorField, point: &[Rational]) -> Result<Vec<Rational>, FieldError> {
    field.evaluate(point)
}

/// True when every coordinate of the vector is zero.
pub fn is_zero_vector(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::model::derive_geometry;
    use proptest::prelude::*;

    fn three_drifts() -> (ModelSpec, DriftGeometry) {
        let spec = ModelSpec::new(1, vec![vec![int(0)], vec![int(1)], vec![int(2)]], vec![vec![int(0); 3]; 3]).unwrap();
        let g = derive_geometry(&spec).unwrap();
        (spec, g)
    }

    fn detection_1d(rate: i64, drift: i64) -> ModelSpec {
        ModelSpec::new(1, vec![vec![int(0)], vec![int(drift)]], vec![vec![int(-rate), int(rate)], vec![int(0), int(0)]])
            .unwrap()
    }

    #[test]
    fn diffusion_field_of_three_drifts() {
        let (_, g) = three_drifts();
        let d = build_diffusion_fields(&g);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].to_string(), "phi1 d/dphi1 + 2*phi2 d/dphi2");
        assert_eq!(d[0].evaluate(&[int(1), int(1)]).unwrap(), vec![int(1), int(2)]);
    }

    #[test]
    fn zero_geometry_gives_zero_fields() {
        let g = DriftGeometry {
            k: 2,
            n: 2,
            a: vec![vec![int(0); 2]; 2],
            sigma: vec![vec![int(0); 2]; 2],
            sqnorms: vec![int(0); 2],
        };
        assert!(build_diffusion_fields(&g).iter().all(VectorField::is_zero));
        assert!(build_testing_drift(&g).is_zero());
    }

    #[test]
    fn testing_drift_values() {
        let (_, g) = three_drifts();
        let d0 = build_testing_drift(&g);
        // phi=(1,1): y=3, component 1 = (1+2)/3 - 1/2, component 2 = (2+4)/3 - 2
        assert_eq!(d0.evaluate(&[int(1), int(1)]).unwrap(), vec![ratio(1, 2), int(0)]);
        // independent float evaluation of the defining formula
        let (p1, p2) = (0.75_f64, 2.5_f64);
        let y = 1.0 + p1 + p2;
        let c1 = p1 * ((1.0 * p1 + 2.0 * p2) / y - 0.5);
        let c2 = p2 * ((2.0 * p1 + 4.0 * p2) / y - 2.0);
        let v = d0.evaluate_f64(&[p1, p2]);
        assert!((v[0] - c1).abs() < 1e-12 && (v[1] - c2).abs() < 1e-12);
        assert_eq!(
            d0.evaluate(&[ratio(3, 4), ratio(5, 2)]).unwrap()[0],
            ratio(3, 4) * (ratio(23, 4) / ratio(17, 4) - ratio(1, 2))
        );
    }

    #[test]
    fn one_state_testing_drift() {
        let spec = ModelSpec::new(1, vec![vec![int(0)], vec![int(1)]], vec![vec![int(0); 2]; 2]).unwrap();
        let d0 = build_testing_drift(&derive_geometry(&spec).unwrap());
        let x = MultiPoly::var(1, 0);
        let expected =
            &RationalCoefficient::with_y_power(&x * &x, 1) - &RationalCoefficient::from_poly(x.scale(&ratio(1, 2)));
        assert!(d0.component(0).equals(&expected));
    }

    #[test]
    fn jump_field_of_classic_detection() {
        let spec = detection_1d(3, 1);
        let j = build_jump_field(&spec);
        let expected = &MultiPoly::constant(1, int(3)) + &MultiPoly::var(1, 0).scale(&int(3));
        assert_eq!(j.component(0), &RationalCoefficient::from_poly(expected));
        let zero = three_drifts().0;
        assert!(build_jump_field(&zero).is_zero());
    }

    #[test]
    fn bracket_is_antisymmetric_and_self_bracket_vanishes() {
        let (_, g) = three_drifts();
        let d0 = build_testing_drift(&g);
        let d1 = build_diffusion_fields(&g).remove(0);
        let ab = lie_bracket(&d0, &d1).unwrap();
        let ba = lie_bracket(&d1, &d0).unwrap();
        assert!(fields_equal(&ab, &ba.scale(&int(-1))));
        assert!(lie_bracket(&d0, &d0).unwrap().is_zero());
    }

    #[test]
    fn drift_diffusion_bracket_at_unit_point() {
        let (_, g) = three_drifts();
        let d0 = build_testing_drift(&g);
        let d1 = build_diffusion_fields(&g).remove(0);
        let b = lie_bracket(&d0, &d1).unwrap();
        assert_eq!(b.evaluate(&[int(1), int(1)]).unwrap(), vec![ratio(-2, 3), ratio(-4, 3)]);
    }

    #[test]
    fn diffusion_fields_commute() {
        let spec = ModelSpec::new(
            2,
            vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(0), int(1)], vec![int(1), int(1)]],
            vec![vec![int(0); 4]; 4],
        )
        .unwrap();
        let d = build_diffusion_fields(&derive_geometry(&spec).unwrap());
        assert!(lie_bracket(&d[0], &d[1]).unwrap().is_zero());
    }

    #[test]
    fn evaluation_rejects_boundary_points() {
        let (_, g) = three_drifts();
        let d1 = build_diffusion_fields(&g).remove(0);
        assert!(matches!(d1.evaluate(&[int(0), int(1)]), Err(FieldError::Domain { index: 0, .. })));
        assert!(matches!(d1.evaluate(&[int(1)]), Err(FieldError::PointLength { .. })));
        assert!(VectorField::zero(2, "0").evaluate(&[int(2), int(3)]).unwrap().iter().all(Zero::is_zero));
    }

    #[test]
    fn bracket_rejects_mismatched_spaces() {
        let a = VectorField::zero(2, "a");
        let b = VectorField::zero(3, "b");
        assert!(matches!(lie_bracket(&a, &b), Err(FieldError::DimensionMismatch(..))));
    }

    #[test]
    fn degree_guard_trips() {
        let x = MultiPoly::var(1, 0);
        let f = VectorField::new(vec![RationalCoefficient::from_poly(x.pow(5))], "f");
        let g = VectorField::new(vec![RationalCoefficient::from_poly(x.pow(4))], "g");
        assert!(matches!(lie_bracket_guarded(&f, &g, 6), Err(FieldError::DegreeGuard { degree: 8, guard: 6 })));
        assert!(lie_bracket_guarded(&f, &g, 8).is_ok());
    }

    #[test]
    fn y_cleared_forms_are_equal_fields() {
        let x = MultiPoly::var(1, 0);
        let a = VectorField::new(vec![RationalCoefficient::with_y_power(x.clone(), 1)], "a");
        let b = VectorField::new(vec![RationalCoefficient::with_y_power(&x * &MultiPoly::y(1), 2)], "b");
        assert!(fields_equal(&a, &b));
        assert!(fields_equal(&a, &a));
    }

    #[test]
    fn golden_display() {
        let x = MultiPoly::var(1, 0);
        let f = VectorField::new(vec![RationalCoefficient::with_y_power(x.pow(2).scale(&ratio(1, 3)), 1)], "f");
        assert_eq!(f.to_string(), "(1/3)*phi1^2*y^-1 d/dphi1");
        let (_, g) = three_drifts();
        assert_eq!(
            build_testing_drift(&g).to_string(),
            "((-1/2)*phi1 + 2*phi1*phi2*y^-1 + phi1^2*y^-1) d/dphi1 + ((-2)*phi2 + 4*phi2^2*y^-1 + 2*phi1*phi2*y^-1) d/dphi2"
        );
    }

    // Random low-degree fields on two variables with y-powers 0..=1.
    fn arb_coeff() -> impl Strategy<Value = RationalCoefficient> {
        prop::collection::vec(((0u32..=2, 0u32..=2), -3i64..=3, 0u32..=1), 0..4).prop_map(|terms| {
            terms.into_iter().fold(RationalCoefficient::zero(2), |acc, ((e1, e2), c, m)| {
                &acc + &RationalCoefficient::with_y_power(MultiPoly::monomial(2, vec![e1, e2], int(c)), m)
            })
        })
    }

    fn arb_field() -> impl Strategy<Value = VectorField> {
        (arb_coeff(), arb_coeff()).prop_map(|(a, b)| VectorField::new(vec![a, b], "F"))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn jacobi_identity(f in arb_field(), g in arb_field(), h in arb_field()) {
            let t1 = lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap();
            let t2 = lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap();
            let t3 = lie_bracket(&h, &lie_bracket(&f, &g).unwrap()).unwrap();
            let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
            prop_assert!(sum.is_zero());
        }

        #[test]
        fn leibniz_rule(f in arb_field(), g in arb_field(), s in arb_coeff()) {
            let lhs = lie_bracket(&f, &g.times(&s)).unwrap();
            let rhs = g.times(&f.apply(&s)).add(&lie_bracket(&f, &g).unwrap().times(&s)).unwrap();
            prop_assert!(fields_equal(&lhs, &rhs));
        }

        #[test]
        fn evaluation_is_additive(f in arb_field(), g in arb_field(), a in 1i64..20, b in 1i64..20) {
            let p = [ratio(a, 7), ratio(b, 3)];
            let sum = f.add(&g).unwrap().evaluate(&p).unwrap();
            let fv = f.evaluate(&p).unwrap();
            let gv = g.evaluate(&p).unwrap();
            let expected: Vec<Rational> = fv.iter().zip(&gv).map(|(x, y)| x + y).collect();
            prop_assert_eq!(sum, expected);
        }
    }

    #[test]
    fn bracket_matches_finite_difference_jacobians() {
        use rand::{Rng, SeedableRng};
        let spec = ModelSpec::new(
            1,
            vec![vec![int(0)], vec![int(1)], vec![int(2)]],
            vec![vec![int(-2), int(1), int(1)], vec![int(1), int(-1), int(0)], vec![int(0), int(0), int(0)]],
        )
        .unwrap();
        let g = derive_geometry(&spec).unwrap();
        let f = build_drift(&spec, &g);
        let d = build_diffusion_fields(&g).remove(0);
        let b = lie_bracket(&f, &d).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let jac = |field: &VectorField, p: &[f64]| -> Vec<Vec<f64>> {
            let h = 1e-6;
            (0..p.len())
                .map(|j| {
                    let mut up = p.to_vec();
                    let mut dn = p.to_vec();
                    up[j] += h;
                    dn[j] -= h;
                    let fu = field.evaluate_f64(&up);
                    let fd = field.evaluate_f64(&dn);
                    fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect()
                })
                .collect()
        };
        for _ in 0..10 {
            let p: Vec<f64> = (0..2).map(|_| rng.random_range(0.1..3.0)).collect();
            let (jf, jd) = (jac(&f, &p), jac(&d, &p));
            let (fv, dv) = (f.evaluate_f64(&p), d.evaluate_f64(&p));
            let exact = b.evaluate_f64(&p);
            for i in 0..2 {
                let approx: f64 = (0..2).map(|j| fv[j] * jd[j][i] - dv[j] * jf[j][i]).sum();
                let scale = exact[i].abs().max(1.0);
                assert!((approx - exact[i]).abs() <= 1e-6 * scale, "{approx} vs {}", exact[i]);
            }
        }
    }
}
