mod common;

use aicert::linalg::{
    determinant, frobenius_eigenvalue, lu_solve, metzler_hurwitz_oracle, output_controllability_rank, static_gain,
    Matrix,
};
use aicert::sgraph::graph_of;
use aicert::{MatrixQ, Rational};
use common::{closure, random_metzler, spectral_abscissa};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn minor_test_matches_spectrum_on_random_metzler() {
    let mut rng = seeded(1);
    let mut stable = 0;
    let mut checked = 0;
    for n in 0..1000 {
        let d = 1 + n % 8;
        let a = random_metzler(&mut rng, d, 0.4);
        let alpha = spectral_abscissa(&a);
        // skip matrices numerically on the boundary
        if alpha.abs() < 1e-7 * a.max_abs() {
            continue;
        }
        checked += 1;
        let hurwitz = metzler_hurwitz_oracle(&a).unwrap();
        assert_eq!(hurwitz, alpha < 0.0, "abscissa {alpha} for {a}");
        stable += hurwitz as usize;
    }
    assert!(checked > 990);
    assert!(stable > 200 && stable < 800, "unbalanced sample: {stable} stable");
}

#[test]
fn frobenius_eigenvalue_is_the_abscissa() {
    let mut rng = seeded(2);
    for n in 0..300 {
        let a = random_metzler(&mut rng, 1 + n % 6, 0.3);
        let lf = frobenius_eigenvalue(&a, 1e-12).unwrap();
        let alpha = spectral_abscissa(&a);
        assert!((lf - alpha).abs() <= 1e-7 * a.max_abs().max(1.0), "{lf} vs {alpha}");
    }
}

#[test]
fn gain_route_matches_krylov_and_graph_routes() {
    let mut rng = seeded(3);
    let mut tested = 0;
    while tested < 500 {
        let d = 2 + tested % 7;
        let a = random_metzler(&mut rng, d, 0.7);
        if !metzler_hurwitz_oracle(&a).unwrap() {
            continue;
        }
        tested += 1;
        let edges: Vec<_> = graph_of(&a).edges().collect();
        let reach = closure(d, &edges);
        for j in 1..d {
            let gain = static_gain(&a, 0, j).unwrap();
            let rank = output_controllability_rank(&a, 0, j);
            assert_eq!(rank, gain.abs() > 1e-10, "gain {gain}");
            assert_eq!(rank, reach[0][j], "row {j} of {a}");
            if rank {
                assert!(gain < 0.0);
            } else {
                assert_eq!(gain, 0.0);
            }
        }
    }
}

#[test]
fn exact_gain_agrees_with_float_gain() {
    let mut rng = seeded(4);
    for n in 0..200 {
        let d = 2 + n % 4;
        let a = random_metzler(&mut rng, d, 0.5);
        if !metzler_hurwitz_oracle(&a).unwrap() {
            continue;
        }
        let q: MatrixQ = a.cast();
        let exact = static_gain(&q, 0, d - 1).unwrap();
        let float = static_gain(&a, 0, d - 1).unwrap();
        assert_eq!(exact.is_zero(), float == 0.0);
        let e = aicert::Scalar::to_f64(&exact);
        assert!((e - float).abs() <= 1e-9 * e.abs().max(1e-12));
    }
}

fn well_conditioned(entries: Vec<f64>, d: usize) -> Matrix<f64> {
    let mut a = Matrix::from_vec(d, d, entries).unwrap();
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = a[(i, i)].signum() * (off + 1.0 + a[(i, i)].abs());
    }
    a
}

fn system() -> impl Strategy<Value = (Matrix<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|d| {
        (prop::collection::vec(-10.0f64..10.0, d * d), prop::collection::vec(-100.0f64..100.0, d))
            .prop_map(move |(e, b)| (well_conditioned(e, d), b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lu_residual_is_small((a, b) in system()) {
        let x = lu_solve(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        let res = r.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(res <= 1e-9 * (1.0 + bn), "residual {}", res);
    }

    #[test]
    fn exact_lu_is_exact((a, b) in system()) {
        let q: MatrixQ = a.cast();
        let bq: Vec<Rational> = b.iter().map(|v| aicert::Scalar::from_f64(*v)).collect();
        let x = lu_solve(&q, &bq).unwrap();
        prop_assert_eq!(q.mul_vec(&x), bq);
    }

    #[test]
    fn determinant_matches_nalgebra((a, _) in system()) {
        let ours = determinant(&a).unwrap();
        let theirs = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice()).determinant();
        prop_assert!((ours - theirs).abs() <= 1e-9 * theirs.abs().max(1.0));
    }

    #[test]
    fn hurwitz_is_invariant_under_diagonal_similarity(seed in any::<u64>(), d in 1usize..6) {
        // D A D^{-1} with D positive diagonal keeps the spectrum and the Metzler structure
        let mut rng = seeded(seed);
        let a = random_metzler(&mut rng, d, 0.3);
        let s: Vec<f64> = (0..d).map(|_| common::log_uniform(&mut rng, -1.0, 1.0)).collect();
        let b = Matrix::from_fn(d, d, |i, j| s[i] * a[(i, j)] / s[j]);
        let alpha = spectral_abscissa(&a);
        prop_assume!(alpha.abs() > 1e-6 * a.max_abs());
        prop_assert_eq!(metzler_hurwitz_oracle(&a).unwrap(), metzler_hurwitz_oracle(&b).unwrap());
    }
}
