use super::*;
use ndarray::array;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sigma_x() -> Operator {
    Operator::from_real(array![[0.0, 1.0], [1.0, 0.0]]).unwrap()
}

fn random_dense(n: usize, rng: &mut impl Rng) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |_| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> Array2<C64> {
    let a = random_dense(n, rng);
    (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * 0.5)
}

/// Independent oracle: scale to norm ≤ 1/2, sum 200 Taylor terms, square back.
fn taylor_expm(a: &Array2<C64>) -> Array2<C64> {
    let norm = expm::norm1(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z * 2f64.powi(-s));
    let n = a.nrows();
    let mut term = Array2::from_diag_elem(n, ONE);
    let mut sum = term.clone();
    for k in 1..200 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum = sum + &term;
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}

#[test]
fn embed_single_site_is_identity_map() {
    let x = sigma_x();
    let e = embed(&x, 0, 1, 2).unwrap();
    assert_eq!(e.to_dense(), x.to_dense());
}

#[test]
fn embed_diagonal_on_second_site() {
    let d = Operator::from_real(array![[2.0, 0.0], [0.0, 5.0]]).unwrap();
    let e = embed(&d, 1, 2, 2).unwrap();
    let expected = Array2::from_diag(&array![c(2.0, 0.0), c(5.0, 0.0), c(2.0, 0.0), c(5.0, 0.0)]);
    assert_eq!(e.to_dense(), expected);
}

#[test]
fn embed_transition_operator_moves_13_to_14() {
    // σ_43 = |4⟩⟨3| raises level index 2 -> 3 on site 1
    let sigma = Operator::from_triplets(4, vec![(3, 2, ONE)]).unwrap();
    let e = embed(&sigma, 1, 2, 4).unwrap();
    let ket13 = StateVector::product(&[0, 2], 4).unwrap();
    let out = e.apply(ket13.amplitudes().view());
    // |13⟩ = 4·0 + 2 = 2, |14⟩ = 4·0 + 3 = 3
    assert_eq!(ket_index("13", 4).unwrap(), 2);
    let mut expected = Array1::zeros(16);
    expected[3] = ONE;
    assert_eq!(out, expected);
}

#[test]
fn embed_rejects_dimension_mismatch_and_bad_site() {
    let x = sigma_x();
    assert!(matches!(embed(&x, 0, 2, 4), Err(Error::InvalidArgument(_))));
    assert!(matches!(embed(&x, 2, 2, 2), Err(Error::InvalidArgument(_))));
    assert!(matches!(embed(&x, 0, 64, 2), Err(Error::Capacity(_))));
}

#[test]
fn embed_switches_to_sparse_from_three_sites() {
    let x = sigma_x();
    assert!(!embed(&x, 0, 2, 2).unwrap().is_sparse());
    assert!(embed(&x, 0, 3, 2).unwrap().is_sparse());
}

#[test]
fn sparse_and_dense_act_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dense = random_dense(4, &mut rng);
    let op = Operator::from_dense(dense).unwrap();
    let sparse = embed(&op.clone().into_sparse(), 1, 3, 4).unwrap();
    let dense_embedded = embed(&op, 1, 3, 4).unwrap().into_dense();
    let v: Array1<C64> = (0..64).map(|_| c(rng.random(), rng.random())).collect();
    let a = sparse.apply(v.view());
    let b = dense_embedded.apply(v.view());
    let diff = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-12, "diff {diff}");
}

#[test]
fn exponential_of_zero_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = Operator::from_dense(random_dense(5, &mut rng)).unwrap();
    let e = matrix_exponential(&a, c(0.0, 0.0)).unwrap();
    assert!(e.max_abs_diff(&Operator::identity(5)).unwrap() < 1e-15);
}

#[test]
fn pauli_rotation_identity() {
    let e = matrix_exponential(&sigma_x(), c(0.0, std::f64::consts::PI / 2.0)).unwrap();
    let expected = sigma_x().scale(c(0.0, 1.0));
    assert!(e.max_abs_diff(&expected).unwrap() < 1e-12);
}

#[test]
fn exponential_matches_taylor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for scale in [0.01, 0.3, 1.0, 3.0] {
        let a = random_dense(8, &mut rng).mapv(|z| z * scale);
        let ours = matrix_exponential(&Operator::from_dense(a.clone()).unwrap(), ONE).unwrap();
        let oracle = taylor_expm(&a);
        let rel = expm::max_abs_diff(&ours.to_dense(), &oracle)
            / oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rel < 1e-10, "scale {scale}: rel {rel}");
    }
}

#[test]
fn exponential_rejects_non_finite() {
    let a = Operator::from_dense(array![[c(f64::NAN, 0.0)]]).unwrap();
    assert!(matches!(
        matrix_exponential(&a, ONE),
        Err(Error::Numeric(_))
    ));
}

#[test]
fn eigensystem_of_diagonal_is_sorted() {
    let d = Operator::from_real(Array2::from_diag(&array![3.0, 1.0, 2.0])).unwrap();
    let es = eigensystem(&d, true).unwrap();
    assert_eq!(es.values.to_vec(), vec![1.0, 2.0, 3.0]);
}

#[test]
fn eigensystem_of_sigma_x() {
    let es = eigensystem(&sigma_x(), true).unwrap();
    assert!((es.values[0] + 1.0).abs() < 1e-14 && (es.values[1] - 1.0).abs() < 1e-14);
    let v0 = es.vectors.column(0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // (1, -1)/√2 up to global phase
    assert!(((v0[0] * v0[1].conj()).re + 0.5).abs() < 1e-12);
    assert!((v0[0].norm() - r).abs() < 1e-12);
}

#[test]
fn eigensystem_reconstructs_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_hermitian(16, &mut rng);
    let op = Operator::from_dense(h.clone()).unwrap();
    let es = eigensystem(&op, true).unwrap();
    let lambda = Array2::from_diag(&es.values.mapv(|x| c(x, 0.0)));
    let recon = es
        .vectors
        .dot(&lambda)
        .dot(&es.vectors.t().mapv(|z| z.conj()));
    let norm = op.norm1();
    assert!(expm::max_abs_diff(&recon, &h) <= 1e-9 * norm);
    for k in 0..16 {
        let v = es.vectors.column(k);
        let av = h.dot(&v);
        let resid = av
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b * es.values[k]).norm())
            .fold(0.0, f64::max);
        assert!(resid <= 1e-9 * norm);
    }
}

#[test]
fn eigensystem_rejects_non_hermitian_input() {
    let a = Operator::from_real(array![[0.0, 1.0], [0.0, 0.0]]).unwrap();
    assert!(matches!(
        eigensystem(&a, true),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        eigensystem(&sigma_x(), false),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn density_matrix_checks() {
    let psi = StateVector::new(array![c(0.6, 0.0), c(0.0, 0.8)]);
    let rho = DensityMatrix::pure(&psi);
    rho.validate().unwrap();
    assert!((rho.trace() - ONE).norm() < 1e-15);
    let bad =
        DensityMatrix::from_entries(array![[c(1.5, 0.0), ZERO], [ZERO, c(-0.5, 0.0)]]).unwrap();
    assert!(matches!(bad.validate(), Err(Error::Integrity(_))));
}

#[test]
fn ket_labels_round_trip() {
    assert_eq!(ket_index("1212", 2).unwrap(), 5);
    assert_eq!(ket_label(5, 4, 2), "1212");
    assert_eq!(ket_index("34", 4).unwrap(), 11);
    assert!(ket_index("15", 4).is_err());
}

fn arb_matrix(n: usize) -> impl Strategy<Value = Array2<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        Array2::from_shape_vec((n, n), v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn embed_is_multiplicative(a in arb_matrix(3), b in arb_matrix(3), site in 0usize..3) {
        let oa = Operator::from_dense(a).unwrap();
        let ob = Operator::from_dense(b).unwrap();
        let lhs = embed(&oa.matmul(&ob).unwrap(), site, 3, 3).unwrap();
        let rhs = embed(&oa, site, 3, 3).unwrap().matmul(&embed(&ob, site, 3, 3).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn embeds_on_different_sites_commute(a in arb_matrix(2), b in arb_matrix(2)) {
        let ea = embed(&Operator::from_dense(a).unwrap(), 0, 3, 2).unwrap();
        let eb = embed(&Operator::from_dense(b).unwrap(), 2, 3, 2).unwrap();
        let ab = ea.matmul(&eb).unwrap();
        let ba = eb.matmul(&ea).unwrap();
        prop_assert!(ab.max_abs_diff(&ba).unwrap() <= 1e-12);
    }

    #[test]
    fn exponential_is_a_one_parameter_group(a in arb_matrix(4), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let op = Operator::from_dense(a).unwrap();
        let e1 = matrix_exponential(&op, c(t1, 0.0)).unwrap();
        let e2 = matrix_exponential(&op, c(t2, 0.0)).unwrap();
        let e12 = matrix_exponential(&op, c(t1 + t2, 0.0)).unwrap();
        let prod = e1.matmul(&e2).unwrap();
        let scale = e12.to_dense().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(prod.max_abs_diff(&e12).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn trace_of_exponential_is_sum_of_exponentiated_eigenvalues(a in arb_matrix(5)) {
        let h = (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let op = Operator::from_dense(h).unwrap();
        let es = eigensystem(&op, true).unwrap();
        let expected: f64 = es.values.iter().map(|l| l.exp()).sum();
        let tr = matrix_exponential(&op, ONE).unwrap().trace();
        prop_assert!((tr.re - expected).abs() <= 1e-9 * expected);
        prop_assert!(tr.im.abs() <= 1e-9 * expected);
    }
}
