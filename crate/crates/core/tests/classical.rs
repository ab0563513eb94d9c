use maass_core::arith;
use maass_core::classical::{self, QExpansion};
use maass_core::error::Error;
use maass_core::field::{FieldElement, QuadField};
use proptest::prelude::*;

const FIELDS: [(i64, i64); 4] = [(-1, 8), (-7, 6), (-11, 4), (-23, 4)];

fn divisor_sum(k: &QuadField, n: u64, w: i64) -> FieldElement {
    let mut s = k.zero();
    for d in 1..=n {
        if n % d == 0 {
            s = &s + &k.int(k.chi(d as i64) as i64 * (d as i64).pow((w - 2) as u32));
        }
    }
    s
}

#[test]
fn eisenstein_coefficients() {
    for (d, k) in FIELDS {
        let f = QuadField::new(d).unwrap();
        let e = classical::eisenstein(&f, k, 60).unwrap();
        assert_eq!(e.coeff(0).unwrap(), f.zero());
        assert_eq!(e.coeff(1).unwrap(), f.one());
        for n in 1..=60u64 {
            assert_eq!(e.coeff(n as i64).unwrap(), divisor_sum(&f, n, k));
        }
        for p in arith::primes_from(2).take_while(|&p| p < 60) {
            let expected = 1 + f.chi(p as i64) as i64 * (p as i64).pow((k - 2) as u32);
            assert_eq!(e.coeff(p as i64).unwrap(), f.int(expected));
        }
    }
    let f = QuadField::new(-7).unwrap();
    assert_eq!(classical::eisenstein(&f, 6, 2).unwrap().coeff(2).unwrap(), f.int(17));
}

#[test]
fn eisenstein_is_an_eigenform() {
    for (d, k) in FIELDS {
        let f = QuadField::new(d).unwrap();
        let e = classical::eisenstein(&f, k, 600).unwrap();
        for p in [2u64, 3, 5, 7] {
            if f.chi(p as i64) == 0 {
                continue;
            }
            let t = e.hecke_tp(p).unwrap();
            let lambda = f.int(1 + f.chi(p as i64) as i64 * (p as i64).pow((k - 2) as u32));
            assert_eq!(t.bound(), 600 / p);
            for n in 1..=t.bound() as i64 {
                assert_eq!(t.coeff(n).unwrap(), &e.coeff(n).unwrap() * &lambda, "d={d} p={p} n={n}");
            }
        }
    }
}

#[test]
fn hecke_on_indicator_and_zero() {
    let f = QuadField::new(-7).unwrap();
    let mut c = vec![f.zero(); 41];
    c[1] = f.one();
    let e = QExpansion::new(&f, 5, c);
    for p in [2u64, 3, 5] {
        let t = e.hecke_tp(p).unwrap();
        assert_eq!(t.coeff(1).unwrap(), f.zero());
        let expected = f.chi(p as i64) as i64 * (p as i64).pow(4);
        assert_eq!(t.coeff(p as i64).unwrap(), f.int(expected));
    }
    let z = QExpansion::zero(&f, 5, 40);
    assert!(z.hecke_tp(2).unwrap().coeffs().iter().all(|c| c.is_zero()));
    assert!(matches!(e.hecke_tp(7), Err(Error::Mismatch(_))));
    assert!(matches!(e.hecke_tp(4), Err(Error::NotPrime(4))));
}

#[test]
fn a_f_tables() {
    let g = QuadField::new(-1).unwrap();
    assert_eq!(classical::a_f_table(&g), vec![1, 0, 1, 2]);
    for (d, _) in FIELDS {
        let f = QuadField::new(d).unwrap();
        let table = classical::a_f_table(&f);
        let order = classical::a_f_group(&f).len() as u64;
        assert_eq!(table.iter().sum::<u64>(), order);
        assert!(table[0] >= 1);
        for n in 0..100u64 {
            assert_eq!(classical::a_f(&f, n), classical::a_f(&f, n + f.abs_disc() as u64));
        }
        // a_F(n) counts square roots of -n modulo D_F in the residue model
        if d % 4 != 0 && (-d) % 4 == 3 {
            let m = f.abs_disc();
            for n in 0..m {
                let roots = (0..m).filter(|x| (x * x + n) % m == 0).count() as u64;
                assert_eq!(table[n as usize], roots, "d={d} n={n}");
            }
        }
    }
}

#[test]
fn truncation_is_explicit() {
    let f = QuadField::new(-7).unwrap();
    let e = classical::eisenstein(&f, 6, 10).unwrap();
    assert!(matches!(e.coeff(11), Err(Error::Truncation { .. })));
    assert_eq!(e.coeff(-1).unwrap(), f.zero());
    assert_eq!(e.coeff_q(&arith::qf(3, 2)).unwrap(), f.zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hecke_operators_commute(idx in 0usize..4, seed in prop::collection::vec(-20i64..20, 301)) {
        let (d, k) = FIELDS[idx];
        let f = QuadField::new(d).unwrap();
        let e = QExpansion::new(&f, k - 1, seed.iter().map(|&x| f.int(x)).collect());
        let ps: Vec<u64> = [2u64, 3, 5, 7].into_iter().filter(|&p| f.chi(p as i64) != 0).take(2).collect();
        let (p, r) = (ps[0], ps[1]);
        let a = e.hecke_tp(p).unwrap().hecke_tp(r).unwrap();
        let b = e.hecke_tp(r).unwrap().hecke_tp(p).unwrap();
        let upto = a.bound().min(b.bound());
        prop_assert_eq!(a.truncate(upto).unwrap(), b.truncate(upto).unwrap());
        prop_assert!(upto >= 300 / (p * r) - 1);
    }
}
