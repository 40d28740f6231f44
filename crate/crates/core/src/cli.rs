//! Command-line front end. [`run`] is the whole program minus process
//! plumbing, so it can be driven from tests.
//!
//! Exit codes: 0 when the command succeeds or the checked property holds,
//! 1 when a checked property fails, 2 on usage or input errors.

use std::{ fmt::Write as _, fs, path::Path };
use clap::{ Parser, Subcommand };
use num_complex::Complex64 as C64;
use serde::Deserialize;
use serde_json::{ json, Value };
use crate::{
    cfa::{ self, Cfa },
    diagram::{ self, Diagram, EvalContext },
    ghzw::{ self, GhzwPair },
    rewrite::{ self, AlgebraKind },
    slocc::{ self, SloccLabel },
    tensor::{ digits, Tensor, Tolerance },
};

#[derive(Parser, Debug)]
#[command(name = "ghzw", version, about = "GHZ/W calculus toolkit")]
struct Cli {
    /// Comparison tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Bind an algebra name to a CFA file, as `name=path`.
    #[arg(long = "alg", global = true, value_name = "NAME=PATH")]
    algs: Vec<String>,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Evaluate a diagram to a tensor.
    Eval { diagram: String },
    /// Check the Frobenius algebra axioms.
    CheckCfa { cfa: String },
    /// Decide GHZ or W type and conjugate to special or anti-special form.
    ClassifyCfa { cfa: String },
    /// SLOCC class of a two- or three-qubit state.
    ClassifyState { state: String },
    /// Superclass label of a state on four or more qubits.
    Superclass { state: String },
    /// Search for a Frobenius-state witness of a three-qubit state.
    FrobeniusState { state: String },
    /// Check the pair consequences (a)-(g).
    PairCheck { pair: String },
    /// Build the partner of a special or anti-special algebra.
    Partner { cfa: String },
    /// Normal form of a diagram.
    Normalize {
        diagram: String,
        /// scfa, acfa, cfa or mixed; inferred from the algebra if omitted.
        #[arg(long)]
        kind: Option<String>,
        /// Step budget for mixed diagrams.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
    },
    /// Build the multiplexor of two states and certify its output.
    Qmux { psi: String, phi: String },
    /// Factor a 2x2 matrix as P L D U Q and rebuild it as a diagram.
    Pldu { matrix: String },
    /// Graphviz rendering of a diagram.
    ExportDot { diagram: String },
}

/// Exit code with the text for stdout and stderr.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self { Fail(e.to_string()) }
}

type CliResult<T> = Result<T, Fail>;

/// Formats to 12 significant digits, trimming trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() { return if x == 0.0 { "0".into() } else { x.to_string() }; }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=12).contains(&mag) {
        let s = format!("{x:.11e}");
        let (m, e) = s.split_once('e').expect("exponent");
        let m = m.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{e}");
    }
    let prec = (11 - mag).max(0) as usize;
    let s = format!("{x:.prec$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" { "0".into() } else { s }
}

/// Rounds to 12 significant digits so JSON reports print stably.
fn round12(x: f64) -> f64 { fmt_num(x).parse().unwrap_or(x) }

fn fmt_c(z: C64) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (_, true) => fmt_num(z.re),
        (true, false) => format!("{}i", fmt_num(z.im)),
        _ => {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", fmt_num(z.re), fmt_num(z.im.abs()))
        }
    }
}

fn jc(z: C64) -> Value { json!([round12(z.re), round12(z.im)]) }

fn jt(t: &Tensor) -> Value {
    json!({
        "in": t.in_arity(), "out": t.out_arity(), "dim": t.dim(),
        "entries": t.entries().iter().map(|&z| jc(z)).collect::<Vec<_>>(),
    })
}

fn jnum(x: f64) -> Value { if x.is_finite() { json!(round12(x)) } else { Value::Null } }

/// Nonzero entries as `|out><in|` lines (kets alone for states).
fn tensor_text(t: &Tensor) -> String {
    let bits = |idx: usize, n: usize| digits(idx, n, t.dim()).iter().map(|d| d.to_string()).collect::<String>();
    let mut s = format!("tensor {} -> {}\n", t.in_arity(), t.out_arity());
    let mut any = false;
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            let z = t.get(r, c);
            if z.norm() == 0.0 { continue; }
            any = true;
            let label = match (t.in_arity(), t.out_arity()) {
                (0, 0) => "scalar".to_string(),
                (0, m) => format!("|{}>", bits(r, m)),
                (n, 0) => format!("<{}|", bits(c, n)),
                (n, m) => format!("|{}><{}|", bits(r, m), bits(c, n)),
            };
            let _ = writeln!(s, "  {label}  {}", fmt_c(z));
        }
    }
    if !any { s.push_str("  (zero)\n"); }
    s
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Fail(format!("cannot read '{path}': {e}")))
}

fn load_cfa(spec: &str) -> CliResult<Cfa> {
    if !Path::new(spec).exists() {
        match spec {
            "ghz" => return Ok(Cfa::ghz()),
            "w" => return Ok(Cfa::w()),
            _ => {}
        }
    }
    let c: Cfa = serde_json::from_str(&read(spec)?).map_err(|e| Fail(format!("{spec}: {e}")))?;
    Ok(c.validated()?)
}

#[derive(Deserialize)]
struct StateJson {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

fn load_state(path: &str) -> CliResult<Tensor> {
    let s: StateJson = serde_json::from_str(&read(path)?).map_err(|e| Fail(format!("{path}: {e}")))?;
    if s.amplitudes.len() != 1usize << s.n {
        return Err(Fail(format!("{path}: expected {} amplitudes for n = {}", 1usize << s.n, s.n)));
    }
    Ok(Tensor::state(s.amplitudes.iter().map(|a| C64::new(a[0], a[1])).collect())?)
}

#[derive(Deserialize)]
struct PairJson {
    scfa: Cfa,
    acfa: Cfa,
    #[serde(default)]
    tick: Option<Tensor>,
}

fn load_pair(spec: &str) -> CliResult<GhzwPair> {
    if spec == "canonical" && !Path::new(spec).exists() { return Ok(GhzwPair::canonical()); }
    let p: PairJson = serde_json::from_str(&read(spec)?).map_err(|e| Fail(format!("{spec}: {e}")))?;
    let (s, a) = (p.scfa.validated()?, p.acfa.validated()?);
    Ok(match p.tick {
        Some(tick) => GhzwPair { scfa: s, acfa: a, tick },
        None => GhzwPair::new(s, a)?,
    })
}

fn load_diagram(path: &str, ctx: &EvalContext) -> CliResult<Diagram> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(diagram::from_json(&text)?)
    } else {
        Ok(diagram::parse_dsl(&text, &ctx.names())?)
    }
}

fn context(algs: &[String]) -> CliResult<EvalContext> {
    let mut ctx = EvalContext::default();
    for a in algs {
        let (name, path) = a.split_once('=').ok_or_else(|| Fail(format!("--alg expects NAME=PATH, got '{a}'")))?;
        let c = load_cfa(path)?.renamed(name);
        if c.dim != ctx.dim { return Err(Fail(format!("algebra '{name}' has dimension {}", c.dim))); }
        ctx = ctx.with_algebra(c);
    }
    Ok(ctx)
}

/// A verb's result: pass/fail, the text report and the JSON body.
struct Report {
    pass: bool,
    text: String,
    body: Value,
}

fn label_json(l: &SloccLabel) -> Value { json!(l.to_string()) }

fn run_verb(cli: &Cli) -> CliResult<Report> {
    let tol = Tolerance::new(cli.tol, cli.tol)?;
    let ctx = context(&cli.algs)?;
    Ok(match &cli.verb {
        Verb::Eval { diagram } => {
            let d = load_diagram(diagram, &ctx)?;
            let t = diagram::eval(&d, &ctx)?;
            Report { pass: true, text: tensor_text(&t), body: json!({ "tensor": jt(&t) }) }
        }
        Verb::CheckCfa { cfa: path } => {
            let c = load_cfa(path)?;
            let rep = cfa::check_cfa(&c, tol)?;
            let mut text = String::new();
            for ch in &rep.checks {
                let _ = writeln!(text, "{:<10} {}  residual {}", ch.axiom, if ch.pass { "ok  " } else { "FAIL" }, fmt_num(ch.residual));
            }
            let _ = writeln!(text, "{}", if rep.pass { "pass".to_string() } else { format!("fail: {}", rep.failures().join(", ")) });
            let checks: Vec<Value> = rep.checks.iter()
                .map(|c| json!({ "axiom": c.axiom, "residual": jnum(c.residual), "pass": c.pass })).collect();
            Report { pass: rep.pass, text, body: json!({ "pass": rep.pass, "checks": checks, "failures": rep.failures() }) }
        }
        Verb::ClassifyCfa { cfa: path } => {
            let c = load_cfa(path)?;
            match cfa::classify_cfa(&c, tol) {
                Ok(cl) => {
                    let conj_ok = match cl.class {
                        cfa::CfaClass::Ghz => cfa::check_special(&cl.conjugate, tol)?,
                        cfa::CfaClass::W => cfa::check_antispecial(&cl.conjugate, tol)?,
                    };
                    let text = format!("{}\nL = {}\n", cl.class, tensor_text(&cl.l).lines().skip(1).map(str::trim).collect::<Vec<_>>().join(", "));
                    Report {
                        pass: conj_ok,
                        text,
                        body: json!({ "class": cl.class, "l": jt(&cl.l), "l_state": jt(&cl.l_state), "conjugate_checks": conj_ok }),
                    }
                }
                Err(e @ (cfa::CfaError::NotCfa(_) | cfa::CfaError::WrongClass { .. })) => Report {
                    pass: false, text: format!("{e}\n"), body: json!({ "error": e.to_string() }),
                },
                Err(e) => return Err(e.into()),
            }
        }
        Verb::ClassifyState { state } => {
            let psi = load_state(state)?;
            let label = match psi.out_arity() {
                2 => slocc::two_qubit_label(&psi, tol),
                3 => slocc::tripartite_classify(&psi, tol)?,
                n => return Err(Fail(format!("classify-state takes 2 or 3 qubits, got {n}; see superclass"))),
            };
            Report { pass: true, text: format!("{label}\n"), body: json!({ "label": label_json(&label) }) }
        }
        Verb::Superclass { state } => {
            let psi = load_state(state)?;
            let label = slocc::superclass_label(&psi, tol)?;
            Report { pass: true, text: format!("{label}\n"), body: json!({ "label": label_json(&label) }) }
        }
        Verb::FrobeniusState { state } => {
            let psi = load_state(state)?;
            match slocc::is_frobenius_state(&psi, cli.seed, tol)? {
                Some((phi, xi)) => Report {
                    pass: true,
                    text: format!("frobenius state\nphi: {}xi: {}", tensor_text(&phi), tensor_text(&xi)),
                    body: json!({ "frobenius": true, "phi": jt(&phi), "xi": jt(&xi) }),
                },
                None => Report { pass: false, text: "no witness found\n".into(), body: json!({ "frobenius": false }) },
            }
        }
        Verb::PairCheck { pair } => {
            let p = load_pair(pair)?;
            let rep = ghzw::pair_check(&p, tol)?;
            let mut text = String::new();
            for c in &rep.checks {
                let _ = writeln!(text, "{:<28} {}  residual {}", c.name, if c.pass { "ok  " } else { "FAIL" }, fmt_num(c.residual));
            }
            let _ = writeln!(text, "{}", if rep.pass { "pass".to_string() } else { format!("fail: {}", rep.failures().join(", ")) });
            let checks: Vec<Value> = rep.checks.iter()
                .map(|c| json!({ "name": c.name, "residual": jnum(c.residual), "pass": c.pass })).collect();
            Report { pass: rep.pass, text, body: json!({ "pass": rep.pass, "checks": checks, "failures": rep.failures() }) }
        }
        Verb::Partner { cfa: path } => {
            let c = load_cfa(path)?;
            let rep = cfa::check_cfa(&c, tol)?;
            if !rep.pass {
                return Ok(Report {
                    pass: false,
                    text: format!("not a CFA: {} fails\n", rep.failures().join(", ")),
                    body: json!({ "error": "not a CFA", "failures": rep.failures() }),
                });
            }
            let cfa_json = |c: &Cfa| json!({ "name": c.name, "dim": c.dim, "mult": jt(&c.mult), "unit": jt(&c.unit), "comult": jt(&c.comult), "counit": jt(&c.counit) });
            if cfa::check_special(&c, tol)? {
                let (a, b) = ghzw::partner_from_scfa(&c, tol)?;
                let text = format!("special; partners: {} and {}\nlolli: {}", a.name, b.name, tensor_text(&a.lolli()));
                Report { pass: true, text, body: json!({ "input": "scfa", "partners": [cfa_json(&a), cfa_json(&b)] }) }
            } else if cfa::check_antispecial(&c, tol)? {
                let s = ghzw::partner_from_acfa(&c, tol)?;
                let text = format!("anti-special; partner: {}\nunit: {}", s.name, tensor_text(&s.unit));
                Report { pass: true, text, body: json!({ "input": "acfa", "partners": [cfa_json(&s)] }) }
            } else {
                Report { pass: false, text: "neither special nor anti-special\n".into(), body: json!({ "error": "neither special nor anti-special" }) }
            }
        }
        Verb::Normalize { diagram, kind, budget } => {
            let d = load_diagram(diagram, &ctx)?;
            let algs = d.algebras();
            let has_tick = d.nodes().iter().any(|k| matches!(k, diagram::NodeKind::Tick));
            let kind = match kind.as_deref() {
                Some("mixed") => None,
                Some(k) => Some(AlgebraKind::from_name(k).ok_or_else(|| Fail(format!("unknown kind '{k}'")))?),
                None if algs.len() <= 1 && !has_tick => {
                    let c = algs.first().and_then(|a| ctx.algebras.get(a)).cloned().unwrap_or_else(Cfa::ghz);
                    Some(if cfa::check_special(&c, tol)? { AlgebraKind::Scfa }
                         else if cfa::check_antispecial(&c, tol)? { AlgebraKind::Acfa }
                         else { AlgebraKind::Cfa })
                }
                None => None,
            };
            match kind {
                Some(k) => {
                    let nf = rewrite::normalize_single(&d, k)?;
                    let mut text = format!("kind {}\n", serde_json::to_value(k)?.as_str().unwrap_or(""));
                    for (ins, outs, f) in &nf.forms {
                        let _ = writeln!(text, "  inputs {ins:?} outputs {outs:?}: {}", serde_json::to_string(f)?);
                    }
                    let _ = writeln!(text, "scalar {}", fmt_c(nf.scalar));
                    let forms: Vec<Value> = nf.forms.iter().map(|(i, o, f)| json!({
                        "inputs": i, "outputs": o, "form": normal_form_json(f),
                    })).collect();
                    let canon: Value = serde_json::from_str(&diagram::to_json(&nf.diagram))?;
                    Report { pass: true, text, body: json!({ "kind": k, "forms": forms, "scalar": jc(nf.scalar), "diagram": canon }) }
                }
                None => {
                    let rules = rewrite::builtin_rules()?;
                    let res = rewrite::normalize_mixed(&d, &rules, *budget)?;
                    let text = format!(
                        "mixed: {} steps{}, {} -> {} nodes, scalar {}\n{}\n",
                        res.steps.len(),
                        if res.budget_exhausted { " (budget exhausted)" } else { "" },
                        d.node_count(), res.diagram.node_count(), fmt_c(res.scalar), res.steps.join(" "),
                    );
                    let canon: Value = serde_json::from_str(&diagram::to_json(&res.diagram))?;
                    Report {
                        pass: true, text,
                        body: json!({ "kind": "mixed", "steps": res.steps, "budget_exhausted": res.budget_exhausted,
                                      "scalar": jc(res.scalar), "diagram": canon }),
                    }
                }
            }
        }
        Verb::Qmux { psi, phi } => {
            let (a, b) = (load_state(psi)?, load_state(phi)?);
            let cert = ghzw::qmux_check(&a, &b, cli.seed, tol)?;
            let text = format!("{}residual {}\n{}\n", tensor_text(&cert.output), fmt_num(cert.residual),
                if cert.pass { "certified" } else { "not certified" });
            Report {
                pass: cert.pass, text,
                body: json!({
                    "pass": cert.pass, "residual": jnum(cert.residual), "output": jt(&cert.output),
                    "target": jt(&cert.target), "local_maps": cert.local_maps.iter().map(jt).collect::<Vec<_>>(),
                }),
            }
        }
        Verb::Pldu { matrix } => {
            let t: Tensor = serde_json::from_str(&read(matrix)?).map_err(|e| Fail(format!("{matrix}: {e}")))?;
            let m = t.as_matrix2().ok_or_else(|| Fail("pldu expects a 1 -> 1 qubit tensor".into()))?;
            let f = ghzw::pldu_decompose(&m);
            let rec = f.reconstruct().rel_diff(&t)?;
            let via = ghzw::synthesize(&ghzw::pldu_diagram(&f)?, &EvalContext::default())?.rel_diff(&t)?;
            let pass = rec <= tol.bound(1.0) && via <= tol.bound(1.0);
            let row = |x: &[C64; 2]| format!("({}, {})", fmt_c(x[0]), fmt_c(x[1]));
            let text = format!(
                "P = {:?}, Q = {:?}\nxi = {}  phi = {}  psi = {}\nreconstruction residual {}\ndiagram residual {}\n",
                f.p, f.q, row(&f.xi), row(&f.phi), row(&f.psi), fmt_num(rec), fmt_num(via),
            );
            Report {
                pass, text,
                body: json!({
                    "p": f.p, "q": f.q, "l": jt(&f.l), "d": jt(&f.d), "u": jt(&f.u),
                    "xi": f.xi.iter().map(|&z| jc(z)).collect::<Vec<_>>(),
                    "phi": f.phi.iter().map(|&z| jc(z)).collect::<Vec<_>>(),
                    "psi": f.psi.iter().map(|&z| jc(z)).collect::<Vec<_>>(),
                    "reconstruction_residual": jnum(rec), "diagram_residual": jnum(via), "pass": pass,
                }),
            }
        }
        Verb::ExportDot { diagram } => {
            let d = load_diagram(diagram, &ctx)?;
            let dot = diagram::to_dot(&d);
            Report { pass: true, text: dot.clone(), body: json!({ "dot": dot }) }
        }
    })
}

fn normal_form_json(f: &rewrite::NormalForm) -> Value {
    match f {
        rewrite::NormalForm::Scalar { value } => json!({ "variant": "scalar", "value": jc(*value) }),
        other => serde_json::to_value(other).unwrap_or(Value::Null),
    }
}

fn verb_name(v: &Verb) -> &'static str {
    match v {
        Verb::Eval { .. } => "eval",
        Verb::CheckCfa { .. } => "check-cfa",
        Verb::ClassifyCfa { .. } => "classify-cfa",
        Verb::ClassifyState { .. } => "classify-state",
        Verb::Superclass { .. } => "superclass",
        Verb::FrobeniusState { .. } => "frobenius-state",
        Verb::PairCheck { .. } => "pair-check",
        Verb::Partner { .. } => "partner",
        Verb::Normalize { .. } => "normalize",
        Verb::Qmux { .. } => "qmux",
        Verb::Pldu { .. } => "pldu",
        Verb::ExportDot { .. } => "export-dot",
    }
}

/// Runs the program on `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = if e.use_stderr() { 2 } else { 0 };
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let verb = verb_name(&cli.verb);
    match run_verb(&cli) {
        Ok(rep) => {
            let code = if rep.pass { 0 } else { 1 };
            let stdout = if cli.json {
                let mut body = json!({ "schema": 1, "verb": verb, "pass": rep.pass });
                if let (Value::Object(b), Value::Object(extra)) = (&mut body, rep.body) {
                    for (k, v) in extra { b.entry(k).or_insert(v); }
                }
                format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
            } else {
                rep.text
            };
            Outcome { code, stdout, stderr: String::new() }
        }
        Err(Fail(msg)) => {
            let stdout = if cli.json {
                format!("{}\n", json!({ "schema": 1, "verb": verb, "error": msg }))
            } else {
                String::new()
            };
            Outcome { code: 2, stdout, stderr: format!("error: {msg}\n") }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(std::f64::consts::FRAC_1_SQRT_2), "0.707106781187");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1234567.891234567), "1234567.89123");
        assert_eq!(fmt_num(1.5e-20), "1.5e-20");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_c(C64::new(1.0, -0.5)), "1-0.5i");
        assert_eq!(fmt_c(C64::new(0.0, 2.0)), "2i");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["ghzw", "frobnicate"]).code, 2);
        assert_eq!(run(["ghzw", "eval", "/nonexistent.diag"]).code, 2);
        assert_eq!(run(["ghzw", "--help"]).code, 0);
    }

    #[test]
    fn builtin_names() {
        let o = run(["ghzw", "check-cfa", "w"]);
        assert_eq!(o.code, 0, "{o:?}");
        let o = run(["ghzw", "classify-cfa", "ghz"]);
        assert!(o.stdout.starts_with("ghz"), "{o:?}");
        let o = run(["ghzw", "pair-check", "canonical", "--json"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("\"verb\": \"pair-check\""));
    }
}
