//! Random rule applications checked against tensor semantics.

use std::collections::BTreeMap;
use rand::{ seq::SliceRandom, Rng };
use serde::Serialize;
use crate::{
    diagram::{ eval, Diagram, EvalContext, GenOp, NodeKind },
    random::{ rng, SeededRng },
};
use super::{ apply, find_matches, RewriteError, RewriteResult, RewriteRule };

const MAX_NODES: usize = 10;
const MAX_WIDTH: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HarnessMode { Ghz, W, Mixed }

impl HarnessMode {
    fn algebras(self) -> &'static [&'static str] {
        match self {
            Self::Ghz => &["ghz"],
            Self::W => &["w"],
            Self::Mixed => &["ghz", "w"],
        }
    }

    fn admits(self, d: &Diagram) -> bool {
        let algs = self.algebras();
        d.nodes().iter().all(|k| match k {
            NodeKind::Gen { alg, .. } => algs.contains(&alg.as_str()),
            NodeKind::Tick => self == Self::Mixed,
            _ => false,
        })
    }

    fn random_node(self, rng: &mut SeededRng) -> Diagram {
        let algs = self.algebras();
        if self == Self::Mixed && rng.gen_bool(0.15) { return Diagram::tick(); }
        let alg = algs.choose(rng).expect("nonempty");
        Diagram::gen(alg, *GenOp::ALL.choose(rng).expect("nonempty"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub mode: HarnessMode,
    pub trials: usize,
    pub applied: usize,
    pub max_residual: f64,
    pub per_rule: BTreeMap<String, usize>,
    pub worst: Option<String>,
}

fn layer(g: &Diagram, width: usize, rng: &mut SeededRng, fits: usize) -> Diagram {
    let left = rng.gen_range(0..=width - fits);
    Diagram::identity(left).par(g).par(&Diagram::identity(width - fits - left))
}

/// A random diagram of at most ten nodes containing `rule.lhs`.
pub fn random_host(rule: &RewriteRule, mode: HarnessMode, rng: &mut SeededRng) -> Diagram {
    let mut d = rule.lhs.clone();
    let target = rng.gen_range(d.node_count()..=MAX_NODES);
    let mut attempts = 0;
    while d.node_count() < target && attempts < 40 {
        attempts += 1;
        let g = mode.random_node(rng);
        let (a, b) = g.nodes()[0].arity();
        let next = match rng.gen_range(0..4) {
            0 if b <= d.n_inputs() => layer(&g, d.n_inputs(), rng, b).then(&d).ok(),
            1 if a <= d.n_outputs() => d.then(&layer(&g, d.n_outputs(), rng, a)).ok(),
            2 => Some(if rng.gen_bool(0.5) { d.par(&g) } else { g.par(&d) }),
            3 if d.n_outputs() >= 2 => {
                let mut perm: Vec<usize> = (0..d.n_outputs()).collect();
                perm.shuffle(rng);
                d.then(&Diagram::permutation(&perm)).ok()
            }
            _ => None,
        };
        if let Some(n) = next {
            if n.n_inputs() + n.n_outputs() <= MAX_WIDTH { d = n; }
        }
    }
    d
}

/// Runs `trials` random rewrites in `mode` and records the worst relative
/// residual of `eval(host) = scalar · eval(rewritten)`.
pub fn soundness_harness(
    rules: &[RewriteRule], mode: HarnessMode, seed: u64, trials: usize,
) -> RewriteResult<SoundnessReport> {
    let ctx = EvalContext::default();
    let mut pool: Vec<RewriteRule> = Vec::new();
    for r in rules.iter().filter(|r| mode.admits(&r.lhs) && mode.admits(&r.rhs)) {
        pool.push(r.clone());
        let rev = r.reversed();
        let bare = rev.lhs.wires().iter().any(|w| matches!(
            (w.from, w.to), (crate::diagram::Src::Input(_), crate::diagram::Dst::Output(_))));
        if r.bidirectional && rev.lhs.node_count() > 0 && !bare { pool.push(rev); }
    }
    let mut rng = rng(seed);
    let mut report = SoundnessReport {
        mode, trials, applied: 0, max_residual: 0.0, per_rule: BTreeMap::new(), worst: None,
    };
    for _ in 0..trials {
        let rule = pool.choose(&mut rng).expect("nonempty pool");
        let host = random_host(rule, mode, &mut rng);
        let mut matches = find_matches(rule, &host)?;
        matches.shuffle(&mut rng);
        for m in matches {
            let after = match apply(rule, &host, &m) {
                Ok(a) => a,
                Err(RewriteError::Cycle) => continue,
                Err(e) => return Err(e),
            };
            let before = eval(&host, &ctx)?;
            let after_v = eval(&after, &ctx)?.scale(rule.scalar);
            let res = before.rel_diff(&after_v)?;
            if res > report.max_residual || report.worst.is_none() {
                report.max_residual = report.max_residual.max(res);
                report.worst = Some(rule.name.clone());
            }
            report.applied += 1;
            *report.per_rule.entry(rule.name.clone()).or_default() += 1;
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::builtin_rules;

    #[test]
    fn hosts_contain_the_pattern() {
        let rules = builtin_rules().unwrap();
        let mut rng = rng(3);
        for r in &rules {
            let h = random_host(r, HarnessMode::Mixed, &mut rng);
            assert!(h.node_count() <= MAX_NODES.max(r.lhs.node_count()));
            assert!(!find_matches(r, &h).unwrap().is_empty(), "{}", r.name);
        }
    }

    #[test]
    fn short_runs_are_sound() {
        let rules = builtin_rules().unwrap();
        for mode in [HarnessMode::Ghz, HarnessMode::W, HarnessMode::Mixed] {
            let rep = soundness_harness(&rules, mode, 11, 40).unwrap();
            assert!(rep.applied >= 30, "{rep:?}");
            assert!(rep.max_residual < 1e-9, "{rep:?}");
        }
    }
}
