mod common;

use common::*;
use hdg_core::analysis::identities::random_affine_element;
use hdg_core::analysis::{
    least_squares_slope, pairwise_slopes, solution_errors, ManufacturedSolution, NeumannSide, PolynomialSolution,
};
use hdg_core::local::{assemble_local, condense, Discretization};
use hdg_core::problem::ZeroData;
use hdg_core::voigt::{tangent_matrix, tensor_to_voigt, voigt_to_tensor};
use hdg_core::{generate_cartesian_mesh, solve_stokes, ElementType, MeshFamily};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TYPES: [ElementType; 4] =
    [ElementType::Triangle, ElementType::Quadrilateral, ElementType::Tetrahedron, ElementType::Hexahedron];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slope_of_power_law_is_exact(c in 1e-3f64..1e3, m in 0.5f64..6.0, levels in 3usize..7) {
        let h: Vec<f64> = (1..=levels).map(|l| 0.5f64.powi(l as i32)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(m)).collect();
        prop_assert!((least_squares_slope(&h, &e) - m).abs() <= 1e-10);
        for s in pairwise_slopes(&h, &e) {
            prop_assert!((s - m).abs() <= 1e-10);
        }
    }

    #[test]
    fn voigt_round_trip(dim in 2usize..4, vals in proptest::collection::vec(-10.0f64..10.0, 9)) {
        let t = DMatrix::from_fn(dim, dim, |i, j| vals[i.min(j) * 3 + i.max(j)]);
        let v = tensor_to_voigt(&t);
        prop_assert!((voigt_to_tensor(dim, &v).unwrap() - &t).amax() <= 1e-14);
    }

    #[test]
    fn tangent_is_orthogonal_to_normal(dim in 2usize..4, a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let raw = [a, b, if dim == 3 { c } else { 0.0 }];
        let len = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(len > 1e-3);
        let n: Vec<f64> = raw[..dim].iter().map(|x| x / len).collect();
        let t = tangent_matrix(&n).unwrap();
        if dim == 2 {
            prop_assert!((t[(0, 0)] * n[0] + t[(1, 0)] * n[1]).abs() <= 1e-14);
            prop_assert!((t[(0, 0)].hypot(t[(1, 0)]) - 1.0).abs() <= 1e-14);
        } else {
            // T x = n x x for the unit vectors
            for j in 0..3 {
                let mut e = [0.0; 3];
                e[j] = 1.0;
                let cross = [n[1] * e[2] - n[2] * e[1], n[2] * e[0] - n[0] * e[2], n[0] * e[1] - n[1] * e[0]];
                for i in 0..3 {
                    prop_assert!((t[(i, j)] - cross[i]).abs() <= 1e-14);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn condensed_trace_block_is_symmetric_psd(
        ty in 0usize..4, k in 1usize..4, tau in 0.1f64..100.0, nu in 0.1f64..10.0, seed in any::<u64>()
    ) {
        let et = TYPES[ty];
        prop_assume!(!(et.dim() == 3 && k == 3));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = all_neumann(single_element(et, random_affine_element(et, &mut rng)));
        let disc = Discretization::new(et, k, tau, nu).unwrap();
        let ce = condense(&disc, &assemble_local(&disc, &mesh, 0, &ZeroData { dim: et.dim(), nu }).unwrap()).unwrap();
        let kuu = ce.stiffness_trace_block();
        let scale = kuu.amax();
        prop_assert!((&kuu - kuu.transpose()).amax() <= 1e-10 * scale);
        let min = ((&kuu + kuu.transpose()) * 0.5).symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * scale, "{min:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn polynomial_solutions_are_exact(fam in 0usize..5, k in 1usize..3, seed in any::<u64>(), nu in 0.2f64..5.0) {
        let family = MeshFamily::ALL[fam];
        let dim = family.dim();
        let exact = PolynomialSolution::random(dim, k, nu, seed, NeumannSide::Lower(dim - 1));
        let mesh = generate_cartesian_mesh(family, 2).unwrap().classify_boundary(|x| exact.is_neumann(x));
        let disc = Discretization::new(family.element_type(), k, family.default_tau(), nu).unwrap();
        let sol = solve_stokes(&mesh, &disc, &exact).unwrap();
        let err = solution_errors(&mesh, &disc, &sol, &exact).unwrap();
        prop_assert!(err.u <= 1e-8 && err.p <= 1e-8 && err.l <= 1e-8, "{err:?}");
    }

    #[test]
    fn scaling_leaves_velocity_unchanged(c in 0.01f64..100.0, seed in any::<u64>()) {
        let exact = PolynomialSolution::random(2, 3, 1.0, seed, NeumannSide::Lower(1));
        let mesh = generate_cartesian_mesh(MeshFamily::Tri2, 2).unwrap().classify_boundary(|x| exact.is_neumann(x));
        let d1 = Discretization::new(mesh.element_type, 1, 4.0, 1.0).unwrap();
        let dc = Discretization::new(mesh.element_type, 1, 4.0 * c, c).unwrap();
        let a = solve_stokes(&mesh, &d1, &exact).unwrap();
        let b = solve_stokes(&mesh, &dc, &Scaled { inner: &exact, c }).unwrap();
        for (fa, fb) in a.fields.elements.iter().zip(&b.fields.elements) {
            prop_assert!((&fb.u - &fa.u).amax() <= 1e-10 * (1.0 + fa.u.amax()));
            prop_assert!((&fb.p / c - &fa.p).amax() <= 1e-10 * (1.0 + fa.p.amax()));
            prop_assert!((&fb.l / c.sqrt() - &fa.l).amax() <= 1e-10 * (1.0 + fa.l.amax()));
        }
    }
}
