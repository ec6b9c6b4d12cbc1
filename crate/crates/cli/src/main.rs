//! `mfslab`: JSON front end for the mfslab library.
//!
//! Every subcommand prints one report on stdout and exits 0 when all checks
//! pass, 1 when a check fails and 2 on malformed input.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use mfslab::deformed::{
    curvature_check_all, p3_flat_coords, toric_flat_coords, uv_operators, verify_deformed_coords, CoordinateCandidate,
};
use mfslab::fdalg::parse_element;
use mfslab::frobenius::{
    frobenius_check, matrix_nilpotent_order, nilpotent_filtration, quotient_filtration, weight_filtration,
    weight_relation_report, FrobeniusAlgebra, FrobeniusFiltration,
};
use mfslab::localqh::{
    catalog, local_product_direct, local_product_pipeline, model_of, route_difference, with_model, GWTable, Geometry,
    SurfaceData, Target, CATALOG_NAMES,
};
use mfslab::mfs::{mfs_check, MFSData};
use mfslab::mhs::{build_mhs, polarization_check, SurfaceHodgeInput};
use mfslab::report::Report;
use mfslab::ringcore::Rational;

#[derive(Parser)]
#[command(name = "mfslab", version, about = "Exact checks for Frobenius filtrations and mixed Frobenius structures")]
struct Cli {
    /// Add wall-clock time to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Input {
    /// Read JSON from this file.
    #[arg(long, conflicts_with = "stdin")]
    input: Option<PathBuf>,
    /// Read JSON from standard input.
    #[arg(long)]
    stdin: bool,
}

#[derive(Args, Clone)]
struct Element {
    /// Nilpotent element as a linear combination of labels, e.g. "H" or "2*E - 1/3*H^2".
    #[arg(long)]
    element: Option<String>,
}

#[derive(Copy, Clone, ValueEnum)]
enum TargetArg {
    Toric,
    P3,
}

#[derive(Subcommand)]
enum Cmd {
    /// Algebra axioms and Frobenius pairing checks.
    CheckFrobenius {
        #[command(flatten)]
        input: Input,
    },
    /// The filtration (n) + Ker(n^k) with its graded pairings.
    Nilpotent {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        element: Element,
    },
    /// Induced filtration on the quotient by I_k.
    Quotient {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        element: Element,
        #[arg(long)]
        level: i32,
    },
    /// Monodromy weight filtration of n compared with the nilpotent filtration.
    WeightFiltration {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        element: Element,
    },
    /// Mixed Hodge data and polarization of a surface input.
    Mhs {
        #[command(flatten)]
        input: Input,
    },
    /// Every mixed Frobenius structure condition.
    CheckMfs {
        #[command(flatten)]
        input: Input,
    },
    /// Local quantum product of a toric surface or P3 from a GW table.
    LocalQh {
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long)]
        gw: Option<PathBuf>,
        #[arg(long, env = "MFSLAB_ORDER", default_value_t = 3)]
        order: u32,
        #[arg(long, value_enum, default_value_t = TargetArg::Toric)]
        target: TargetArg,
        #[arg(long)]
        check_mfs: bool,
        #[arg(long)]
        emit_mfs: bool,
    },
    /// Deformed connection, its curvature and deformed flat coordinates.
    Deformed {
        #[arg(long, conflicts_with = "stdin")]
        mfs: Option<PathBuf>,
        #[arg(long)]
        stdin: bool,
        #[arg(long, env = "MFSLAB_ORDER")]
        order: Option<u32>,
        #[arg(long)]
        verify_coords: Option<PathBuf>,
        #[arg(long)]
        emit_coords: bool,
        #[arg(long)]
        verify: bool,
    },
    /// Named example algebras.
    Catalog {
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        d: Option<i64>,
        #[arg(long)]
        m: Option<i64>,
        /// Extra parameters as a JSON object.
        #[arg(long)]
        params: Option<String>,
    },
}

/// Malformed input; exit code 2.
struct InputError(String);

impl<E: Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn at<E: Display>(source: &str) -> impl Fn(E) -> InputError + '_ {
    move |e| InputError(format!("{source}: {e}"))
}

struct Loaded {
    source: String,
    value: Value,
}

struct Run {
    command: Map<String, Value>,
    inputs: BTreeMap<String, String>,
    order: Option<u32>,
    report: Report,
    result: Map<String, Value>,
}

impl Run {
    fn new(name: &str) -> Self {
        let mut command = Map::new();
        command.insert("name".into(), json!(name));
        Run { command, inputs: BTreeMap::new(), order: None, report: Report::new(), result: Map::new() }
    }

    fn option(&mut self, k: &str, v: Value) {
        if !v.is_null() && v != json!(false) {
            self.command.insert(k.into(), v);
        }
    }

    fn load_path(&mut self, role: &str, p: &Path) -> Result<Loaded, InputError> {
        let bytes = std::fs::read(p).map_err(at(&p.display().to_string()))?;
        self.parse(role, p.display().to_string(), bytes)
    }

    fn load_stdin(&mut self, role: &str) -> Result<Loaded, InputError> {
        let mut bytes = Vec::new();
        std::io::stdin().read_to_end(&mut bytes).map_err(at("<stdin>"))?;
        self.parse(role, "<stdin>".into(), bytes)
    }

    fn load(&mut self, role: &str, inp: &Input) -> Result<Loaded, InputError> {
        match (&inp.input, inp.stdin) {
            (Some(p), _) => self.load_path(role, p),
            (None, true) => self.load_stdin(role),
            (None, false) => Err(InputError("no input: pass --input FILE or --stdin".into())),
        }
    }

    fn parse(&mut self, role: &str, source: String, bytes: Vec<u8>) -> Result<Loaded, InputError> {
        self.inputs.insert(role.into(), format!("{:x}", Sha256::digest(&bytes)));
        let value: Value = serde_json::from_slice(&bytes)
            .map_err(|e| InputError(format!("{source}:{}:{}: {e}", e.line(), e.column())))?;
        Ok(Loaded { source, value: unwrap_envelope(value) })
    }

    fn result(&mut self, k: &str, v: Value) {
        self.result.insert(k.into(), v);
    }

    fn finish(self, elapsed: Option<f64>) -> (Value, bool) {
        let ok = self.report.all_pass();
        let mut v = json!({
            "command": self.command,
            "inputs": self.inputs,
            "order": self.order,
            "checks": self.report.checks,
            "result": self.result,
            "status": if ok { "pass" } else { "fail" },
        });
        if let Some(t) = elapsed {
            v["timing_ms"] = json!(t);
        }
        (v, ok)
    }
}

/// Accept either bare data or a previous report, whose `result` is the payload.
fn unwrap_envelope(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("checks") && m.contains_key("result") => m.remove("result").unwrap_or_default(),
        v => v,
    }
}

fn frobenius_input(l: &Loaded) -> Result<FrobeniusAlgebra, InputError> {
    FrobeniusAlgebra::from_json(&l.value).map_err(at(&l.source))
}

fn nilpotent_element(l: &Loaded, f: &FrobeniusAlgebra, e: &Element) -> Result<Vec<Rational>, InputError> {
    let a = f.algebra();
    match &e.element {
        Some(text) => parse_element(a.labels(), a.unit(), text).map_err(at("--element")),
        None => serde_json::from_value(l.value.get("nilpotent").cloned().unwrap_or_default())
            .map_err(|_| InputError(format!("{}: no nilpotent element; pass --element", l.source))),
    }
}

fn filtration_json(f: &FrobeniusFiltration) -> Value {
    let mut v = f.to_json();
    v["dims"] = json!(f.dims().into_iter().map(|(k, d)| json!({"k": k, "dim": d})).collect::<Vec<_>>());
    v
}

fn check_frobenius(run: &mut Run, input: &Input) -> Result<(), InputError> {
    let l = run.load("input", input)?;
    let f = frobenius_input(&l)?;
    run.report = frobenius_check(&f);
    run.result("dim", json!(f.dim()));
    run.result("labels", json!(f.algebra().labels()));
    Ok(())
}

fn nilpotent(run: &mut Run, input: &Input, e: &Element) -> Result<(), InputError> {
    run.option("element", json!(e.element));
    let l = run.load("input", input)?;
    let f = frobenius_input(&l)?;
    let n = nilpotent_element(&l, &f, e)?;
    let filt = nilpotent_filtration(&f, &n).map_err(at(&l.source))?;
    run.report = filt.check();
    run.result("element", json!(n));
    run.result("filtration", filtration_json(&filt));
    Ok(())
}

fn quotient(run: &mut Run, input: &Input, e: &Element, level: i32) -> Result<(), InputError> {
    run.option("element", json!(e.element));
    run.option("level", json!(level));
    let l = run.load("input", input)?;
    let f = frobenius_input(&l)?;
    let n = nilpotent_element(&l, &f, e)?;
    let filt = nilpotent_filtration(&f, &n).map_err(at(&l.source))?;
    let (qf, proj) = quotient_filtration(&filt, level).map_err(at("--level"))?;
    run.report.extend_prefixed("filtration.", filt.check());
    run.report.extend_prefixed("quotient.", qf.check());
    run.result("projection", json!(proj));
    run.result("quotient", filtration_json(&qf));
    Ok(())
}

fn weight(run: &mut Run, input: &Input, e: &Element) -> Result<(), InputError> {
    run.option("element", json!(e.element));
    let l = run.load("input", input)?;
    let f = frobenius_input(&l)?;
    let n = nilpotent_element(&l, &f, e)?;
    let filt = nilpotent_filtration(&f, &n).map_err(at(&l.source))?;
    let nm = f.algebra().mult_matrix(&n).map_err(at(&l.source))?;
    let d = matrix_nilpotent_order(&nm).map_err(at(&l.source))?;
    let w = weight_filtration(&nm).map_err(at(&l.source))?;
    let ideals: Vec<_> = (0..=d as i32).filter_map(|k| filt.ideal(k).cloned()).collect();
    run.report.extend_prefixed("filtration.", filt.check());
    run.report.extend_prefixed("relation.", weight_relation_report(&nm, &ideals).map_err(at(&l.source))?);
    run.result("d", json!(d));
    run.result("weight", json!(w.iter().map(|s| json!({"dim": s.dim(), "basis": s.basis()})).collect::<Vec<_>>()));
    run.result("ideal_dims", json!(ideals.iter().map(|s| s.dim()).collect::<Vec<_>>()));
    Ok(())
}

fn mhs(run: &mut Run, input: &Input) -> Result<(), InputError> {
    let l = run.load("input", input)?;
    let raw = l.value.get("params").filter(|p| p.get("prim_dim").is_some()).unwrap_or(&l.value);
    let inp: SurfaceHodgeInput = serde_json::from_value(raw.clone()).map_err(at(&l.source))?;
    let m = build_mhs(&inp).map_err(at(&l.source))?;
    run.report.extend_prefixed("filtration.", m.filtration.check());
    run.report.extend_prefixed("polarization.", polarization_check(&m));
    run.result("mhs", m.to_json());
    Ok(())
}

/// An MFS given bare, as `{"mfs": ...}`, or as a local-qh model to rebuild.
fn mfs_input(run: &mut Run, l: &Loaded) -> Result<MFSData, InputError> {
    if let Some(m) = l.value.get("mfs") {
        return MFSData::from_json(m).map_err(at(&l.source));
    }
    if l.value.get("C").is_some() {
        return MFSData::from_json(&l.value).map_err(at(&l.source));
    }
    let target: Target = serde_json::from_value(l.value.get("target").cloned().unwrap_or_default())
        .map_err(|_| InputError(format!("{}: neither an MFS nor a local-qh result", l.source)))?;
    let order = l.value.get("order").and_then(Value::as_u64).ok_or_else(|| InputError(format!("{}: missing order", l.source)))?;
    let g = match target {
        Target::Toric => Geometry::Toric(SurfaceData::from_json(&l.value["surface"]).map_err(at(&l.source))?),
        Target::P3 => Geometry::P3,
    };
    let t = GWTable::from_json(&l.value["table"]).map_err(at(&l.source))?;
    let (m, diff) = local_routes(&g, &t, order as u32).map_err(at(&l.source))?;
    run.report.record("route_equality", diff);
    Ok(m)
}

fn local_routes(g: &Geometry, t: &GWTable, order: u32) -> Result<(MFSData, Option<Value>), mfslab::localqh::LocalError> {
    let direct = local_product_direct(g, t, order)?;
    let pipeline = local_product_pipeline(g, t, order)?;
    let diff = route_difference(&direct, &pipeline)?;
    Ok((with_model(direct, g, t), diff))
}

fn check_mfs_cmd(run: &mut Run, input: &Input) -> Result<(), InputError> {
    let l = run.load("input", input)?;
    let m = mfs_input(run, &l)?;
    run.order = Some(m.ring.order);
    run.report.extend_prefixed("mfs.", mfs_check(&m));
    run.result("levels", levels_json(&m));
    Ok(())
}

fn levels_json(m: &MFSData) -> Value {
    let labels = m.labels();
    json!(m
        .levels
        .iter()
        .map(|l| json!({
            "k": l.k,
            "labels": l.indices.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>(),
            "eta": l.eta,
        }))
        .collect::<Vec<_>>())
}

#[allow(clippy::too_many_arguments)]
fn local_qh(
    run: &mut Run,
    surface: &Option<PathBuf>,
    gw: &Option<PathBuf>,
    order: u32,
    target: TargetArg,
    check: bool,
    emit: bool,
) -> Result<(), InputError> {
    let target = match target {
        TargetArg::Toric => Target::Toric,
        TargetArg::P3 => Target::P3,
    };
    run.option("target", json!(target));
    run.option("check_mfs", json!(check));
    run.option("emit_mfs", json!(emit));
    run.order = Some(order);
    let g = match (target, surface) {
        (Target::Toric, Some(p)) => {
            let l = run.load_path("surface", p)?;
            Geometry::Toric(SurfaceData::from_json(&l.value).map_err(at(&l.source))?)
        }
        (Target::Toric, None) => return Err(InputError("--target toric needs --surface FILE".into())),
        (Target::P3, None) => Geometry::P3,
        (Target::P3, Some(_)) => return Err(InputError("--surface is only meaningful with --target toric".into())),
    };
    let t = match gw {
        Some(p) => {
            let l = run.load_path("gw", p)?;
            let t = GWTable::from_json(&l.value).map_err(at(&l.source))?;
            if t.target != target {
                return Err(InputError(format!("{}: table target differs from --target", l.source)));
            }
            t
        }
        None => GWTable::empty(target, order),
    };
    let (m, diff) = local_routes(&g, &t, order).map_err(|e| InputError(e.to_string()))?;
    run.report.record("route_equality", diff);
    if check {
        run.report.extend_prefixed("mfs.", mfs_check(&m));
    }
    run.result("target", json!(target));
    run.result("order", json!(order));
    run.result("table", t.to_json());
    if let Geometry::Toric(s) = &g {
        run.result("surface", s.to_json());
    }
    run.result("levels", levels_json(&m));
    if emit {
        run.result("mfs", m.to_json());
    }
    Ok(())
}

fn deformed(
    run: &mut Run,
    mfs: &Option<PathBuf>,
    order: Option<u32>,
    verify_coords: &Option<PathBuf>,
    emit: bool,
    verify: bool,
) -> Result<(), InputError> {
    run.option("order", json!(order));
    run.option("emit_coords", json!(emit));
    run.option("verify", json!(verify));
    let l = match mfs {
        Some(p) => run.load_path("mfs", p)?,
        None => run.load_stdin("mfs")?,
    };
    let m = mfs_input(run, &l)?;
    if let Some(o) = order {
        if o != m.ring.order {
            return Err(InputError(format!("--order {o} differs from the MFS truncation order {}", m.ring.order)));
        }
    }
    run.order = Some(m.ring.order);
    if verify {
        let (uv, rep) = uv_operators(&m).map_err(at(&l.source))?;
        run.report.extend_prefixed("uv.", rep);
        run.report.extend_prefixed("curvature.", curvature_check_all(&m).map_err(at(&l.source))?);
        run.result(
            "V",
            json!(uv.levels.iter().map(|lv| json!({"k": lv.k, "matrix": lv.v})).collect::<Vec<_>>()),
        );
    }
    if emit {
        let (g, t) = model_of(&m).map_err(at(&l.source))?;
        let cand = match &g {
            Geometry::Toric(s) => toric_flat_coords(s, &t, m.ring.order),
            Geometry::P3 => p3_flat_coords(&t, m.ring.order),
        }
        .map_err(at(&l.source))?;
        if verify {
            run.report.extend_prefixed("emitted.", verify_deformed_coords(&m, &cand).map_err(at(&l.source))?);
        }
        run.result("coords", serde_json::to_value(&cand)?);
    }
    if let Some(p) = verify_coords {
        let c = run.load_path("coords", p)?;
        let raw = c.value.get("coords").filter(|v| v.is_object()).unwrap_or(&c.value);
        let cand: CoordinateCandidate = serde_json::from_value(raw.clone()).map_err(at(&c.source))?;
        run.report.extend_prefixed("candidate.", verify_deformed_coords(&m, &cand).map_err(at(&c.source))?);
    }
    Ok(())
}

fn catalog_cmd(run: &mut Run, example: &Option<String>, d: Option<i64>, m: Option<i64>, params: &Option<String>) -> Result<(), InputError> {
    let mut p = match params {
        Some(s) => serde_json::from_str::<Value>(s).map_err(at("--params"))?,
        None => json!({}),
    };
    if !p.is_object() {
        return Err(InputError("--params: expected a JSON object".into()));
    }
    if let Some(d) = d {
        p["d"] = json!(d);
    }
    if let Some(m) = m {
        p["m"] = json!(m);
    }
    run.option("example", json!(example));
    run.option("params", p.clone());
    let Some(name) = example else {
        run.result("examples", json!(CATALOG_NAMES));
        return Ok(());
    };
    let c = catalog(name, &p).map_err(at("--example"))?;
    run.report = frobenius_check(&c.frob);
    run.result = match c.to_json() {
        Value::Object(o) => o,
        _ => unreachable!("catalog entries serialize as objects"),
    };
    Ok(())
}

fn dispatch(cmd: &Cmd) -> Result<Run, InputError> {
    let mut run;
    match cmd {
        Cmd::CheckFrobenius { input } => {
            run = Run::new("check-frobenius");
            check_frobenius(&mut run, input)?;
        }
        Cmd::Nilpotent { input, element } => {
            run = Run::new("nilpotent");
            nilpotent(&mut run, input, element)?;
        }
        Cmd::Quotient { input, element, level } => {
            run = Run::new("quotient");
            quotient(&mut run, input, element, *level)?;
        }
        Cmd::WeightFiltration { input, element } => {
            run = Run::new("weight-filtration");
            weight(&mut run, input, element)?;
        }
        Cmd::Mhs { input } => {
            run = Run::new("mhs");
            mhs(&mut run, input)?;
        }
        Cmd::CheckMfs { input } => {
            run = Run::new("check-mfs");
            check_mfs_cmd(&mut run, input)?;
        }
        Cmd::LocalQh { surface, gw, order, target, check_mfs, emit_mfs } => {
            run = Run::new("local-qh");
            local_qh(&mut run, surface, gw, *order, *target, *check_mfs, *emit_mfs)?;
        }
        Cmd::Deformed { mfs, stdin: _, order, verify_coords, emit_coords, verify } => {
            run = Run::new("deformed");
            deformed(&mut run, mfs, *order, verify_coords, *emit_coords, *verify)?;
        }
        Cmd::Catalog { example, d, m, params } => {
            run = Run::new("catalog");
            catalog_cmd(&mut run, example, *d, *m, params)?;
        }
    }
    Ok(run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match dispatch(&cli.cmd) {
        Ok(run) => {
            let elapsed = cli.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            let (v, ok) = run.finish(elapsed);
            println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(msg)) => {
            eprintln!("mfslab: malformed input: {msg}");
            ExitCode::from(2)
        }
    }
}
