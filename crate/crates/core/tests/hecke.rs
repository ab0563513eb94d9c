use maass_core::arith::q;
use maass_core::class_base::Base;
use maass_core::field::QuadField;
use maass_core::hecke::{self, CosetDefect, HeckeOp, Mat4, R};
use maass_core::hermlat::{self, HermitianForm};
use maass_core::maass::{self, MaassSystem};

fn forms(k: &QuadField, trace_max: i64, dmax: i64) -> Vec<HermitianForm> {
    hermlat::enumerate_t(k, trace_max, true)
        .into_iter()
        .filter(|h| !h.is_zero() && q(k.abs_disc()) * h.det() <= q(dmax))
        .collect()
}

#[test]
fn tables_validate() {
    for p in [2u64, 3, 5] {
        for op in [HeckeOp::T, HeckeOp::U, HeckeOp::Delta] {
            let t = hecke::coset_table(op, p);
            assert_eq!(hecke::validate_coset_table(&t), Ok(()), "{op} at {p}");
        }
    }
}

#[test]
fn corrupted_tables_are_rejected() {
    let mut t = hecke::coset_table(HeckeOp::T, 3);
    let g = Mat4::diag([R::from_integer(3), R::from_integer(1), R::from_integer(1), R::from_integer(1)]);
    t.reps[4] = t.reps[4].right_mul(&g);
    assert!(matches!(
        hecke::validate_coset_table(&t),
        Err(CosetDefect::WrongDoubleCoset { index: 4, .. })
    ));

    let mut t = hecke::coset_table(HeckeOp::U, 2);
    let dup = t.reps[7].clone();
    t.reps.push(dup);
    assert!(matches!(
        hecke::validate_coset_table(&t),
        Err(CosetDefect::Duplicate { first: 7, .. })
    ));

    let mut t = hecke::coset_table(HeckeOp::T, 2);
    t.reps.pop();
    assert!(matches!(hecke::validate_coset_table(&t), Err(CosetDefect::WrongCount { .. })));
}

fn compare(d: i64, k: i64, p: u64, op: HeckeOp, n: u64, trace_max: i64) {
    let field = QuadField::new(d).unwrap();
    let base = Base::build(&field).unwrap();
    let m = MaassSystem::random(&base, k, n, 11).unwrap();
    let drop = p.pow(op.level_drop());
    let mut nonzero = 0;
    for s in field.primes_above(p).unwrap() {
        let closed_sys = hecke::apply_closed(op, &m, s).unwrap();
        for h in forms(&field, trace_max, (n / drop) as i64) {
            for b in 0..base.len() {
                let direct = hecke::apply_direct(op, &m, s, &h, b).unwrap();
                let closed = maass::krieg_coeff(&closed_sys, b, &h).unwrap();
                assert_eq!(direct, closed, "{op} d={d} s={s:?} b={b} h={h:?}");
                nonzero += usize::from(!direct.is_zero());
                if op == HeckeOp::T {
                    assert_eq!(direct, hecke::mess_case_eval(&m, s, &h, b).unwrap());
                }
            }
        }
    }
    assert!(nonzero > 20, "only {nonzero} nonzero comparisons");
}

#[test]
fn t_direct_matches_closed() {
    compare(-7, 6, 2, HeckeOp::T, 60, 4);
    compare(-1, 8, 5, HeckeOp::T, 100, 3);
    compare(-23, 4, 2, HeckeOp::T, 120, 4);
}

#[test]
fn u_direct_matches_closed() {
    compare(-7, 6, 2, HeckeOp::U, 120, 4);
    compare(-23, 4, 2, HeckeOp::U, 240, 3);
}

#[test]
fn delta_direct_matches_closed() {
    compare(-7, 6, 2, HeckeOp::Delta, 40, 4);
    compare(-23, 4, 2, HeckeOp::Delta, 60, 4);
    compare(-1, 8, 5, HeckeOp::Delta, 30, 3);
}

fn coset_path(d: i64, k: i64, p: u64, op: HeckeOp, n: u64, trace_max: i64) {
    let field = QuadField::new(d).unwrap();
    let base = Base::build(&field).unwrap();
    let m = MaassSystem::random(&base, k, n, 5).unwrap();
    let table = hecke::coset_table(op, p);
    let drop = p.pow(op.level_drop());
    for s in field.primes_above(p).unwrap() {
        for h in forms(&field, trace_max, (n / drop) as i64) {
            for b in 0..base.len() {
                let direct = hecke::apply_direct(op, &m, s, &h, b).unwrap();
                let via = hecke::apply_from_cosets(&m, &table, s, &h, b).unwrap();
                assert_eq!(direct, via, "{op} d={d} s={s:?} b={b} h={h:?}");
            }
        }
    }
}

#[test]
fn coset_path_matches_direct() {
    coset_path(-7, 6, 2, HeckeOp::T, 60, 3);
    coset_path(-7, 6, 2, HeckeOp::U, 120, 3);
    coset_path(-7, 6, 2, HeckeOp::Delta, 30, 3);
    coset_path(-23, 4, 2, HeckeOp::T, 80, 3);
}
