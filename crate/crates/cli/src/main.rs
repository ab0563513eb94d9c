use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use maass_core::arith::{self, q};
use maass_core::class_base::{Base, BaseConfig};
use maass_core::classical::QTuple;
use maass_core::descent;
use maass_core::field::{QuadField, Splitting};
use maass_core::hecke::{self, HeckeOp};
use maass_core::hermlat::{self, HermitianForm};
use maass_core::json::{element_pair, CoefficientEntry, ExpansionDoc, MaassDoc, TupleDoc};
use maass_core::maass::{self, MaassSystem, MaassVerdict};

#[derive(Parser)]
#[command(name = "maass", version, about = "Maass space computations over imaginary quadratic fields")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print discriminant, units, class group, base and splitting of small primes.
    FieldInfo {
        #[arg(short, long, allow_hyphen_values = true)]
        d: i64,
        /// Weight to check against the number of units.
        #[arg(short, long)]
        k: Option<i64>,
        #[arg(long, default_value_t = 1)]
        exponent: i64,
    },
    /// Run a verification suite and write a JSON report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        cfg: RunArgs,
        /// Comma separated primes; cosets defaults to 2,3,5 and the other
        /// suites to the split primes below 6.
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trace bound for the hermitian forms that are checked.
        #[arg(long, default_value_t = 4)]
        trace: i64,
        #[arg(short, long)]
        o: Option<PathBuf>,
        /// Multiply the first determinant factor of every descended split
        /// operator by 2 before comparing.
        #[arg(long, hide = true)]
        corrupt_gamma: bool,
    },
    /// Lift a q-expansion to a Maass system, tabulate it and descend again.
    Lift {
        /// A q-expansion or tuple document.
        #[arg(long, conflicts_with = "eisenstein", required_unless_present = "eisenstein")]
        input: Option<PathBuf>,
        #[arg(long)]
        eisenstein: bool,
        #[command(flatten)]
        cfg: RunArgs,
        #[arg(long, default_value_t = 4)]
        trace: i64,
        #[arg(short, long)]
        o: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(short, long, allow_hyphen_values = true)]
    d: i64,
    #[arg(short, long)]
    k: i64,
    #[arg(short = 'N', long = "bound", default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    exponent: i64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Cosets,
    Diagonalize,
    Invariance,
    Equivariance,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Cosets => "cosets",
            Suite::Diagonalize => "diagonalize",
            Suite::Invariance => "invariance",
            Suite::Equivariance => "equivariance",
            Suite::All => "all",
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::FieldInfo { d, k, exponent } => field_info(d, k, exponent),
        Cmd::Verify { suite, cfg, primes, seed, trace, o, corrupt_gamma } => {
            let ctx = Ctx::new(&cfg, primes, seed, trace, corrupt_gamma)?;
            verify(&ctx, suite, o.as_deref())
        }
        Cmd::Lift { input, eisenstein, cfg, trace, o } => lift(&cfg, input.as_deref(), eisenstein, trace, &o),
    }
}

fn build_base(field: &QuadField, exponent: i64) -> Result<Base> {
    let cfg = BaseConfig { exponent, ..BaseConfig::default() };
    Ok(Base::with_config(field, &cfg)?)
}

fn field_info(d: i64, k: Option<i64>, exponent: i64) -> Result<ExitCode> {
    let field = QuadField::new(d).with_context(|| format!("unsupported field d = {d}"))?;
    let base = build_base(&field, exponent)?;
    let w = field.unit_count();
    println!("field    {field}");
    println!("D_F      {}", field.abs_disc());
    println!("w        {w}");
    println!("h_F      {}", field.class_number());
    let g = base.group();
    println!("classes");
    for i in 0..g.order() {
        let f = g.form(i);
        println!("  [{i}] ({}, {}, {})", f.a, f.b, f.c);
    }
    println!("composition");
    for i in 0..g.order() {
        let row: Vec<String> = (0..g.order()).map(|j| g.compose(i, j).to_string()).collect();
        println!("  {}", row.join(" "));
    }
    println!("base (exponent {})", base.exponent());
    for (i, e) in base.entries().iter().enumerate() {
        println!("  b{i} = {e}  class {}", base.class(i));
    }
    println!("primes below 50");
    for p in arith::primes_from(2).take_while(|&p| p < 50) {
        let desc = match field.splitting(p)? {
            Splitting::Split => {
                let [s, t] = field.primes_above(p)?;
                format!("split  {s} {t}")
            }
            Splitting::Inert => "inert".to_string(),
            Splitting::Ramified => "ramified".to_string(),
        };
        println!("  {p:>2} {desc}");
    }
    if let Some(k) = k {
        if k % w as i64 != 0 {
            eprintln!("warning: k = {k} is not divisible by w = {w}; the determinant factors are not well defined");
        }
    }
    Ok(ExitCode::SUCCESS)
}

struct Ctx {
    field: QuadField,
    base: Base,
    k: i64,
    n: u64,
    primes: Vec<u64>,
    seed: u64,
    trace: i64,
    corrupt_gamma: bool,
}

impl Ctx {
    fn new(cfg: &RunArgs, primes: Vec<u64>, seed: u64, trace: i64, corrupt_gamma: bool) -> Result<Self> {
        let field = QuadField::new(cfg.d).with_context(|| format!("unsupported field d = {}", cfg.d))?;
        let base = build_base(&field, cfg.exponent)?;
        base.check_weight(cfg.k)?;
        for &p in &primes {
            if !arith::is_prime(p) {
                bail!("{p} is not a prime");
            }
            if field.abs_disc() % p as i64 == 0 {
                bail!("p = {p} divides D_F = {}", field.abs_disc());
            }
        }
        Ok(Ctx { field, base, k: cfg.k, n: cfg.n, primes, seed, trace, corrupt_gamma })
    }

    /// Primes for the field suites: the given list, or the split primes
    /// below 6.
    fn field_primes(&self) -> Vec<u64> {
        if !self.primes.is_empty() {
            return self.primes.clone();
        }
        [2u64, 3, 5].into_iter().filter(|&p| self.splitting(p) == Some(Splitting::Split)).collect()
    }

    fn splitting(&self, p: u64) -> Option<Splitting> {
        self.field.splitting(p).ok()
    }

    fn forms(&self, dmax: u64) -> Vec<HermitianForm> {
        hermlat::enumerate_t(&self.field, self.trace, true)
            .into_iter()
            .filter(|h| !h.is_zero() && q(self.field.abs_disc()) * h.det() <= q(dmax as i64))
            .collect()
    }
}

#[derive(Default)]
struct SuiteReport {
    checks: Vec<Value>,
    mismatches: Vec<Value>,
}

/// `[a, b_x, b_y, c]` for `h = [[a, b], [conj(b), c]]`.
fn form_json(h: &HermitianForm) -> Value {
    let [bx, by] = element_pair(&h.b);
    json!([arith::format_q(&h.a), bx, by, arith::format_q(&h.c)])
}

fn verify(ctx: &Ctx, suite: Suite, out: Option<&Path>) -> Result<ExitCode> {
    let suites = match suite {
        Suite::All => vec![Suite::Cosets, Suite::Diagonalize, Suite::Invariance, Suite::Equivariance],
        s => vec![s],
    };
    let mut results = Vec::new();
    let mut total = 0;
    for s in suites {
        let r = match s {
            Suite::Cosets => suite_cosets(ctx),
            Suite::Diagonalize => suite_diagonalize(ctx)?,
            Suite::Invariance => suite_invariance(ctx)?,
            Suite::Equivariance => suite_equivariance(ctx)?,
            Suite::All => unreachable!(),
        };
        total += r.mismatches.len();
        results.push(json!({
            "suite": s.name(),
            "passed": r.mismatches.is_empty(),
            "checks": r.checks,
            "mismatches": r.mismatches,
        }));
    }
    let report = json!({
        "config": {
            "suite": suite.name(),
            "d": ctx.field.d(),
            "k": ctx.k,
            "N": ctx.n,
            "primes": ctx.primes,
            "seed": ctx.seed,
            "trace": ctx.trace,
            "base": ctx.base.entries().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "exponent": ctx.base.exponent(),
            "corrupt_gamma": ctx.corrupt_gamma,
        },
        "suites": results,
        "mismatch_count": total,
        "passed": total == 0,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!("{}: {}", suite.name(), if total == 0 { "pass".to_string() } else { format!("{total} mismatches") });
    Ok(if total == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn suite_cosets(ctx: &Ctx) -> SuiteReport {
    let primes = if ctx.primes.is_empty() { vec![2, 3, 5] } else { ctx.primes.clone() };
    let mut r = SuiteReport::default();
    for p in primes {
        for op in [HeckeOp::T, HeckeOp::U, HeckeOp::Delta] {
            let t = hecke::coset_table(op, p);
            r.checks.push(json!({"op": op.to_string(), "p": p, "count": t.reps.len(), "expected": op.expected_count(p)}));
            if let Err(e) = hecke::validate_coset_table(&t) {
                r.mismatches.push(json!({"op": op.to_string(), "p": p, "defect": format!("{e:?}")}));
            }
        }
    }
    r
}

fn suite_diagonalize(ctx: &Ctx) -> Result<SuiteReport> {
    let mut r = SuiteReport::default();
    let forms = ctx.forms(u64::MAX >> 1);
    for p in ctx.field_primes() {
        if ctx.splitting(p) != Some(Splitting::Split) {
            r.checks.push(json!({"p": p, "skipped": "not split"}));
            continue;
        }
        for n in 1..=3u32 {
            let mut bad = 0;
            for h in &forms {
                let ok = match hermlat::diagonalize_mod(&ctx.field, h, p, n) {
                    Ok(res) => hermlat::check_diagonalization(&ctx.field, h, p, n, &res),
                    Err(_) => false,
                };
                if !ok {
                    bad += 1;
                    r.mismatches.push(json!({"p": p, "n": n, "h": form_json(h)}));
                }
            }
            r.checks.push(json!({"p": p, "n": n, "forms": forms.len(), "failed": bad}));
        }
    }
    Ok(r)
}

fn suite_invariance(ctx: &Ctx) -> Result<SuiteReport> {
    let mut r = SuiteReport::default();
    let m = MaassSystem::random(&ctx.base, ctx.k, ctx.n, ctx.seed)?;
    for p in ctx.field_primes() {
        if ctx.splitting(p) != Some(Splitting::Split) {
            r.checks.push(json!({"p": p, "skipped": "not split"}));
            continue;
        }
        for s in ctx.field.primes_above(p)? {
            for op in [HeckeOp::T, HeckeOp::U, HeckeOp::Delta] {
                let closed = hecke::apply_closed(op, &m, s)?;
                let forms = ctx.forms(ctx.n / p.pow(op.level_drop()));
                let mut table = Vec::new();
                let mut bad = 0;
                for h in &forms {
                    for b in 0..ctx.base.len() {
                        let direct = hecke::apply_direct(op, &m, s, h, b)?;
                        let back = maass::krieg_coeff(&closed, b, h)?;
                        let mess = if op == HeckeOp::T { Some(hecke::mess_case_eval(&m, s, h, b)?) } else { None };
                        if direct != back || mess.as_ref().is_some_and(|x| *x != direct) {
                            bad += 1;
                            r.mismatches.push(json!({
                                "op": op.to_string(), "prime": s.to_string(), "h": form_json(h), "b": b,
                                "direct": element_pair(&direct), "closed": element_pair(&back),
                                "case_formula": mess.as_ref().map(element_pair),
                            }));
                        }
                        table.push((h.clone(), b, direct));
                    }
                }
                let verdict = maass::is_maass_consistent(&table, &ctx.base, ctx.k)?;
                let maass_ok = match verdict {
                    MaassVerdict::Consistent { alphas, .. } => {
                        let mut ok = true;
                        for (b, rec) in alphas.iter().enumerate() {
                            for (n, v) in rec {
                                if *v != closed.alpha(b, *n) {
                                    ok = false;
                                    r.mismatches.push(json!({
                                        "op": op.to_string(), "prime": s.to_string(), "b": b, "n": n,
                                        "recovered": element_pair(v), "closed": element_pair(&closed.alpha(b, *n)),
                                    }));
                                }
                            }
                        }
                        ok
                    }
                    MaassVerdict::Inconsistent { h, b, expected, found } => {
                        r.mismatches.push(json!({
                            "op": op.to_string(), "prime": s.to_string(), "h": form_json(&h), "b": b,
                            "maass_expected": element_pair(&expected), "found": element_pair(&found),
                        }));
                        false
                    }
                };
                r.checks.push(json!({
                    "op": op.to_string(), "prime": s.to_string(), "forms": forms.len(),
                    "coefficients": table.len(), "disagreements": bad, "maass_consistent": maass_ok,
                }));
            }
        }
    }
    Ok(r)
}

fn suite_equivariance(ctx: &Ctx) -> Result<SuiteReport> {
    let mut r = SuiteReport::default();
    let mut systems = vec![("random", MaassSystem::random(&ctx.base, ctx.k, ctx.n, ctx.seed)?)];
    let eis = descent::eisenstein_tuple(&ctx.field, ctx.k, ctx.n, ctx.base.len()).ok();
    if let Some(t) = &eis {
        systems.push(("eisenstein", descent::lift(&ctx.base, ctx.k, t)?));
    }
    for p in ctx.field_primes() {
        match ctx.splitting(p) {
            Some(Splitting::Split) => {
                for (name, m) in &systems {
                    for s in ctx.field.primes_above(p)? {
                        for op in [HeckeOp::T, HeckeOp::U, HeckeOp::Delta] {
                            let mut d = descent::desc_op_split(op, s, ctx.k, &ctx.base)?;
                            if ctx.corrupt_gamma {
                                d.scalars.values[0] = d.scalars.values[0].scale(&q(2));
                            }
                            let rep = descent::verify_equivariance_with(m, op, s, ctx.n, &d)?;
                            push_report(&mut r, name, &rep)?;
                        }
                    }
                }
            }
            Some(Splitting::Inert) => {
                let Some(t) = &eis else {
                    r.checks.push(json!({"p": p, "skipped": "no Eisenstein series of this weight"}));
                    continue;
                };
                let lambda = descent::eisenstein_eigenvalue(&ctx.field, p, ctx.k);
                for op in [HeckeOp::T, HeckeOp::U] {
                    let rep = descent::verify_inert_eigen(t, op, p, &lambda)?;
                    push_report(&mut r, "eisenstein", &rep)?;
                }
            }
            _ => r.checks.push(json!({"p": p, "skipped": "ramified"})),
        }
    }
    Ok(r)
}

fn push_report(r: &mut SuiteReport, system: &str, rep: &descent::EquivarianceReport) -> Result<()> {
    let mut v = serde_json::to_value(rep)?;
    v["system"] = json!(system);
    for mm in &rep.mismatches {
        let mut w = serde_json::to_value(mm)?;
        w["system"] = json!(system);
        w["op"] = json!(rep.op);
        w["prime"] = json!(rep.prime);
        r.mismatches.push(w);
    }
    v["mismatches"] = json!(rep.mismatches.len());
    r.checks.push(v);
    Ok(())
}

fn read_input(path: &Path, field: &QuadField, len: usize) -> Result<QTuple> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(doc) = serde_json::from_str::<TupleDoc>(&text) {
        if doc.field != field.d() {
            bail!("input belongs to d = {}, not {}", doc.field, field.d());
        }
        let t = doc.to_tuple(field)?;
        if t.len() != len {
            bail!("input has {} entries for a base of size {len}", t.len());
        }
        return Ok(t);
    }
    let doc: ExpansionDoc = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let e = doc.to_expansion(field)?;
    Ok(QTuple::new(vec![e; len])?)
}

fn lift(cfg: &RunArgs, input: Option<&Path>, eisenstein: bool, trace: i64, out: &Path) -> Result<ExitCode> {
    let field = QuadField::new(cfg.d).with_context(|| format!("unsupported field d = {}", cfg.d))?;
    let base = build_base(&field, cfg.exponent)?;
    base.check_weight(cfg.k)?;
    let t = match input {
        Some(path) if !eisenstein => read_input(path, &field, base.len())?,
        _ => descent::eisenstein_tuple(&field, cfg.k, cfg.n, base.len())?,
    };
    if t.entries[0].weight() != cfg.k - 1 {
        bail!("input has weight {}, expected k - 1 = {}", t.entries[0].weight(), cfg.k - 1);
    }
    for (b, e) in t.entries.iter().enumerate() {
        if let Some(n) = descent::off_support_index(e) {
            bail!("entry {b}: a({n}) is nonzero but a_F({n}) = 0, so no Maass system descends to it");
        }
    }
    let m = descent::lift(&base, cfg.k, &t)?;
    let bound = t.bound();

    let forms: Vec<HermitianForm> = hermlat::enumerate_t(&field, trace, true)
        .into_iter()
        .filter(|h| !h.is_zero() && q(field.abs_disc()) * h.det() <= q(bound as i64))
        .collect();
    let mut table = Vec::new();
    for h in &forms {
        for b in 0..base.len() {
            table.push(CoefficientEntry::new(h, b, &maass::krieg_coeff(&m, b, h)?));
        }
    }

    let back = descent::descend(&m, bound)?;
    let mut diffs = Vec::new();
    for (b, (x, y)) in back.entries.iter().zip(&t.entries).enumerate() {
        for n in 1..=bound as i64 {
            if x.coeff(n)? != y.coeff(n)? {
                diffs.push(json!({"b": b, "n": n}));
            }
        }
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, v: &Value| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
    };
    write("maass.json", &serde_json::to_value(MaassDoc::from_system(&m))?)?;
    write(
        "coefficients.json",
        &json!({"field": field.d(), "k": cfg.k, "trace": trace, "N": bound, "entries": table}),
    )?;
    write("descent.json", &serde_json::to_value(TupleDoc::from_tuple(&field, &back))?)?;
    let a0 = t.entries.iter().any(|e| !e.coeffs()[0].is_zero());
    write(
        "roundtrip.json",
        &json!({"exact": diffs.is_empty(), "checked_range": [1, bound], "differences": diffs, "input_constant_term_dropped": a0}),
    )?;
    let nonzero = m.alphas().iter().flatten().filter(|x| !x.is_zero()).count();
    println!(
        "lifted to {} nonzero alpha values over a base of size {}; {} coefficients with tr(h) <= {trace}; round trip {}",
        nonzero,
        base.len(),
        table.len(),
        if diffs.is_empty() { "exact" } else { "differs" }
    );
    Ok(if diffs.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
