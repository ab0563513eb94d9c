use maass_core::arith::{self, q, qf, Q};
use maass_core::field::{LocalEmbedding, QuadField};
use maass_core::hermlat::{self, HermitianForm};
use maass_core::matrix::Mat2F;
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIELDS: [i64; 4] = [-1, -7, -11, -23];

fn random_integral_hermitian(k: &QuadField, rng: &mut ChaCha8Rng) -> Mat2F {
    let b = k.from_omega(q(rng.gen_range(-20..=20)), q(rng.gen_range(-20..=20)));
    Mat2F::new(k.int(rng.gen_range(-20..=20)), b.clone(), b.conj(), k.int(rng.gen_range(-20..=20)))
}

#[test]
fn lattice_membership_matches_random_pairings() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in FIELDS {
        let k = QuadField::new(d).unwrap();
        let dabs = k.abs_disc();
        let samples: Vec<Mat2F> = (0..200).map(|_| random_integral_hermitian(&k, &mut rng)).collect();
        for a2 in -1..=1 {
            for c2 in -1..=1 {
                for i in 0..=dabs {
                    for j in 0..=dabs {
                        let b = k.from_omega(qf(i, dabs), qf(j, dabs));
                        let h = HermitianForm::new(qf(a2, 2), b, qf(c2, 2));
                        let hm = h.to_matrix(&k);
                        let brute = samples.iter().all(|s| {
                            let t = s.mul(&hm).trace();
                            t.is_rational() && t.x.is_integer()
                        });
                        assert_eq!(hermlat::in_t(&k, &h), brute, "d={d} h={h:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn membership_examples() {
    let k = QuadField::new(-1).unwrap();
    let i = k.sqrt_d();
    assert!(hermlat::in_t(&k, &HermitianForm::identity(&k)));
    assert!(hermlat::in_t(&k, &HermitianForm::new(q(1), i.scale(&qf(1, 2)), q(1))));
    // b = 1/2 pairs to 1 and 0 against the two off-diagonal generators
    let h = HermitianForm::new(q(1), k.rational(qf(1, 2)), q(1));
    assert_eq!(hermlat::trace_pairings(&k, &h), [q(1), q(1), q(1), q(0)]);
    assert!(hermlat::in_t(&k, &h));
}

#[test]
fn enumeration_pins() {
    let k = QuadField::new(-1).unwrap();
    let zero_trace = hermlat::enumerate_t(&k, 0, true);
    assert_eq!(zero_trace.len(), 1);
    assert!(zero_trace[0].is_zero());
    let two = hermlat::enumerate_t(&k, 2, true);
    assert!(two.contains(&HermitianForm::identity(&k)));
    assert_eq!(two.len(), 18);
    for d in FIELDS {
        let f = QuadField::new(d).unwrap();
        for h in hermlat::enumerate_t(&f, 4, true) {
            assert!(hermlat::in_t(&f, &h) && h.is_psd());
        }
        for h in hermlat::enumerate_t(&f, 2, false) {
            assert!(hermlat::in_t(&f, &h));
        }
    }
}

#[test]
fn enumeration_matches_brute_force() {
    for d in [-1i64, -7] {
        let k = QuadField::new(d).unwrap();
        let dabs = k.abs_disc();
        let mut brute = 0;
        for a in 0..=4i64 {
            for c in 0..=(4 - a) {
                for i in -5 * dabs..=5 * dabs {
                    for j in -5 * dabs..=5 * dabs {
                        let b = k.from_omega(qf(i, dabs), qf(j, dabs));
                        let h = HermitianForm::new(q(a), b, q(c));
                        if h.is_psd() && hermlat::in_t(&k, &h) {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(hermlat::enumerate_t(&k, 4, true).len(), brute, "d={d}");
    }
}

fn elementary_word(k: &QuadField, xs: &[(i64, i64)]) -> Mat2F {
    let mut u = Mat2F::identity(k);
    for (n, &(a, b)) in xs.iter().enumerate() {
        let x = k.from_omega(q(a), q(b));
        let e = if n % 2 == 0 {
            Mat2F::new(k.one(), x, k.zero(), k.one())
        } else {
            Mat2F::new(k.one(), k.zero(), x, k.one())
        };
        u = u.mul(&e);
    }
    u
}

fn corpus(k: &QuadField) -> Vec<HermitianForm> {
    hermlat::enumerate_t(k, 3, true).into_iter().filter(|h| !h.is_zero()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn content_is_invariant(idx in 0usize..4, a in -6i64..=6, c in -6i64..=6, i in -9i64..=9, j in -9i64..=9, xs in prop::collection::vec((-3i64..=3, -3i64..=3), 1..5), unit in 0i64..4) {
        let k = QuadField::new(FIELDS[idx]).unwrap();
        // off-diagonal entries of T run over the inverse different
        let root = if k.abs_disc() == -k.d() { k.sqrt_d() } else { k.sqrt_d().scale(&q(2)) };
        let h = HermitianForm::new(q(a), &k.from_omega(q(i), q(j)) * &root.inv(), q(c));
        prop_assume!(!h.is_zero());
        prop_assert!(hermlat::in_t(&k, &h));
        let mut u = elementary_word(&k, &xs);
        if k.unit_count() == 4 {
            let i = k.sqrt_d().pow(unit);
            u = u.mul(&Mat2F::new(i, k.zero(), k.zero(), k.one()));
        }
        let t = hermlat::transform(&k, &h, &u);
        prop_assert!(hermlat::in_t(&k, &t));
        prop_assert_eq!(hermlat::epsilon(&k, &t).unwrap(), hermlat::epsilon(&k, &h).unwrap());
        prop_assert_eq!(t.det(), h.det() * u.det().norm());
    }

    #[test]
    fn content_scales(idx in 0usize..4, hi in 0usize..200, m in 1i64..12) {
        let k = QuadField::new(FIELDS[idx]).unwrap();
        let forms = corpus(&k);
        let h = &forms[hi % forms.len()];
        prop_assert_eq!(hermlat::epsilon(&k, &h.scale(&q(m))).unwrap(), hermlat::epsilon(&k, h).unwrap() * BigInt::from(m));
    }

    #[test]
    fn local_content_agrees(idx in 0usize..4, hi in 0usize..200) {
        let k = QuadField::new(FIELDS[idx]).unwrap();
        let forms = corpus(&k);
        let h = &forms[hi % forms.len()];
        for p in [2u64, 3, 5, 7] {
            if let Ok(primes) = k.primes_above(p) {
                for s in primes {
                    prop_assert_eq!(hermlat::epsilon_p_local(&k, h, s).unwrap(), hermlat::epsilon_p(&k, h, p).unwrap());
                }
            }
        }
    }
}

#[test]
fn transform_examples() {
    let k = QuadField::new(-7).unwrap();
    let h = HermitianForm::new(q(1), k.omega().scale(&qf(1, 7)), q(2));
    assert_eq!(hermlat::transform(&k, &h, &Mat2F::identity(&k)), h);
    let u = Mat2F::new(k.one(), k.zero(), k.zero(), k.int(3));
    assert_eq!(hermlat::transform(&k, &h, &u), HermitianForm::new(q(1), h.b.scale(&q(3)), q(18)));
}

type M2 = [[i64; 2]; 2];

fn sl2(m: i64) -> Vec<M2> {
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    if (a * d - b * c).rem_euclid(m) == 1 {
                        out.push([[a, b], [c, d]]);
                    }
                }
            }
        }
    }
    out
}

/// Whether some `A1, A2` in `SL_2(Z/m)` make `A2^t M A1` diagonal with a unit
/// in the corner.
fn diagonalizable_by_search(mm: &M2, p: i64, m: i64) -> bool {
    let group = sl2(m);
    for a1 in &group {
        let ma = [
            [(mm[0][0] * a1[0][0] + mm[0][1] * a1[1][0]) % m, (mm[0][0] * a1[0][1] + mm[0][1] * a1[1][1]) % m],
            [(mm[1][0] * a1[0][0] + mm[1][1] * a1[1][0]) % m, (mm[1][0] * a1[0][1] + mm[1][1] * a1[1][1]) % m],
        ];
        for a2 in &group {
            let e = |i: usize, j: usize| (a2[0][i] * ma[0][j] + a2[1][i] * ma[1][j]).rem_euclid(m);
            if e(0, 1) == 0 && e(1, 0) == 0 && e(0, 0) % p != 0 {
                return true;
            }
        }
    }
    false
}

fn local_residues(k: &QuadField, h: &HermitianForm, p: u64, n: u32) -> M2 {
    let eps = Q::from_integer(hermlat::epsilon(k, h).unwrap());
    let prim = h.scale(&eps.recip());
    let emb = LocalEmbedding::new(k, k.canonical_prime(p).unwrap(), n);
    let m = hermlat::local_matrix(&prim, &emb);
    let r = |x: &Q| arith::residue(x, &emb.modulus).unwrap().to_string().parse::<i64>().unwrap();
    [[r(&m.0[0][0]), r(&m.0[0][1])], [r(&m.0[1][0]), r(&m.0[1][1])]]
}

#[test]
fn diagonalization_passes_checker() {
    for (d, p) in [(-1i64, 5u64), (-7, 2)] {
        let k = QuadField::new(d).unwrap();
        for h in hermlat::enumerate_t(&k, 6, true).into_iter().filter(|h| !h.is_zero()) {
            let eps = Q::from_integer(hermlat::epsilon(&k, &h).unwrap());
            let det_prim = h.det() / (&eps * &eps);
            for n in 1..=3 {
                let r = hermlat::diagonalize_mod(&k, &h, p, n).unwrap();
                assert!(hermlat::check_diagonalization(&k, &h, p, n, &r), "d={d} h={h:?} n={n}");
                assert!(!(&r.a % BigInt::from(p)).is_zero());
                // determinants agree modulo p^n
                let pn = arith::pow_big(p, n);
                let lhs = arith::residue(&det_prim, &pn).unwrap();
                let rhs = arith::residue(&Q::from_integer(&r.a * &r.d), &pn).unwrap();
                assert_eq!(lhs, rhs, "d={d} h={h:?} n={n}");
            }
        }
    }
}

#[test]
fn exhaustive_search_agrees_on_small_moduli() {
    for (d, p, n) in [(-7i64, 2u64, 1u32), (-7, 2, 2), (-1, 5, 1)] {
        let k = QuadField::new(d).unwrap();
        let m = p.pow(n) as i64;
        for h in hermlat::enumerate_t(&k, 4, true).into_iter().filter(|h| !h.is_zero()) {
            let mm = local_residues(&k, &h, p, n);
            assert!(diagonalizable_by_search(&mm, p as i64, m), "d={d} h={h:?}");
            assert!(hermlat::check_diagonalization(&k, &h, p, n, &hermlat::diagonalize_mod(&k, &h, p, n).unwrap()));
        }
    }
    // the hyperbolic plane over Q(sqrt(-7)) at 2^2
    let k = QuadField::new(-7).unwrap();
    let h = HermitianForm::new(q(0), k.sqrt_d().inv(), q(0));
    assert!(hermlat::in_t(&k, &h));
    let r = hermlat::diagonalize_mod(&k, &h, 2, 2).unwrap();
    assert!(hermlat::check_diagonalization(&k, &h, 2, 2, &r));
    assert!(diagonalizable_by_search(&local_residues(&k, &h, 2, 2), 2, 4));
}

#[test]
fn checker_rejects_bad_output() {
    let k = QuadField::new(-1).unwrap();
    let h = HermitianForm::new(q(2), k.sqrt_d().scale(&qf(1, 2)), q(3));
    let mut r = hermlat::diagonalize_mod(&k, &h, 5, 2).unwrap();
    assert!(hermlat::check_diagonalization(&k, &h, 5, 2, &r));
    r.a += BigInt::from(1);
    assert!(!hermlat::check_diagonalization(&k, &h, 5, 2, &r));
    assert!(hermlat::diagonalize_mod(&k, &h, 3, 1).is_err());
}
