//! Polynomial dynamical systems, labelings, Büchi automata, and the
//! enumeration of product-system constraint instances.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};
use crate::semialg::{sample_set, AxisBox, RegionUnion, SamplerConfig, SemiAlgebraicSet};

/// `x_{t+1} = f(x_t)` on a compact state set `X` with initial set `X0`.
#[derive(Clone, Debug)]
pub struct DynamicalSystem {
    space: VariableSpace,
    f: Vec<Polynomial>,
    state: SemiAlgebraicSet,
    init: SemiAlgebraicSet,
    bounds: AxisBox,
    regions: BTreeMap<String, RegionUnion>,
}

impl DynamicalSystem {
    pub fn new(
        space: &VariableSpace,
        f: Vec<Polynomial>,
        state: SemiAlgebraicSet,
        init: SemiAlgebraicSet,
    ) -> Result<Self> {
        if f.len() != space.arity() {
            return Err(Error::structural(format!(
                "dynamics has {} components for {} state variables",
                f.len(),
                space.arity()
            )));
        }
        if f.iter().any(|p| p.space() != space) || state.space() != space || init.space() != space {
            return Err(Error::structural("dynamics and sets must share the state space"));
        }
        let bounds = state.bounds().cloned().ok_or_else(|| Error::validation("the state set needs a bounding box"))?;
        Ok(Self { space: space.clone(), f, state, init, bounds, regions: BTreeMap::new() })
    }

    pub fn with_region(mut self, name: impl Into<String>, region: RegionUnion) -> Result<Self> {
        if region.space() != &self.space {
            return Err(Error::structural("region lives outside the state space"));
        }
        self.regions.insert(name.into(), region);
        Ok(self)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.arity()
    }

    pub fn dynamics(&self) -> &[Polynomial] {
        &self.f
    }

    pub fn state_set(&self) -> &SemiAlgebraicSet {
        &self.state
    }

    pub fn init_set(&self) -> &SemiAlgebraicSet {
        &self.init
    }

    pub fn bounds(&self) -> &AxisBox {
        &self.bounds
    }

    pub fn region(&self, name: &str) -> Option<&RegionUnion> {
        self.regions.get(name)
    }

    pub fn regions(&self) -> &BTreeMap<String, RegionUnion> {
        &self.regions
    }

    pub fn max_dynamics_degree(&self) -> u32 {
        self.f.iter().map(Polynomial::degree).max().unwrap_or(0).max(1)
    }

    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        self.f.iter().map(|p| p.eval_unchecked(x)).collect()
    }

    /// Sampled check that `X0` points lie in `X`; returns the offending points.
    pub fn audit_init_in_state(&self, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let bbox = self.init.bounds().unwrap_or(&self.bounds);
        let batch = sample_set(&self.init, bbox, samples, seed, &SamplerConfig::default())?;
        Ok(batch.points.into_iter().filter(|p| !self.state.contains(p)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    /// Names of the system regions containing each state.
    pub membership: Vec<Vec<String>>,
    /// Set when the orbit left the bounding box of `X` and was cut short.
    pub truncated: bool,
}

impl Trajectory {
    pub fn visits(&self, region: &str) -> Vec<usize> {
        self.membership.iter().enumerate().filter(|(_, m)| m.iter().any(|r| r == region)).map(|(t, _)| t).collect()
    }
}

/// Iterate `x_{t+1} = f(x_t)` for `steps` steps from `x0`.
pub fn simulate(sys: &DynamicalSystem, x0: &[f64], steps: usize) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::structural("initial point has the wrong dimension"));
    }
    let member = |x: &[f64]| -> Vec<String> {
        sys.regions.iter().filter(|(_, r)| r.contains(x)).map(|(n, _)| n.clone()).collect()
    };
    let mut states = vec![x0.to_vec()];
    let mut membership = vec![member(x0)];
    let mut truncated = false;
    let mut x = x0.to_vec();
    for _ in 0..steps {
        x = sys.step(&x);
        if !sys.bounds.contains(&x) || x.iter().any(|v| !v.is_finite()) {
            truncated = true;
            break;
        }
        membership.push(member(&x));
        states.push(x.clone());
    }
    Ok(Trajectory { states, membership, truncated })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub letter: usize,
    pub to: usize,
}

/// Nondeterministic Büchi automaton with named states and letters.
#[derive(Clone, Debug)]
pub struct BuchiAutomaton {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: BTreeSet<usize>,
    accepting: BTreeSet<usize>,
    transitions: Vec<Transition>,
}

impl BuchiAutomaton {
    pub fn new(
        states: &[&str],
        alphabet: &[&str],
        initial: &[&str],
        accepting: &[&str],
        edges: &[(&str, &str, &str)],
    ) -> Result<Self> {
        let find = |list: &[&str], name: &str, what: &str| {
            list.iter().position(|s| *s == name).ok_or_else(|| Error::validation(format!("unknown {what} `{name}`")))
        };
        for (list, what) in [(states, "state"), (alphabet, "letter")] {
            for (i, s) in list.iter().enumerate() {
                if list[..i].contains(s) {
                    return Err(Error::validation(format!("duplicate {what} `{s}`")));
                }
            }
        }
        let initial = initial.iter().map(|s| find(states, s, "state")).collect::<Result<_>>()?;
        let accepting = accepting.iter().map(|s| find(states, s, "state")).collect::<Result<_>>()?;
        let mut transitions = edges
            .iter()
            .map(|(a, l, b)| {
                Ok(Transition {
                    from: find(states, a, "state")?,
                    letter: find(alphabet, l, "letter")?,
                    to: find(states, b, "state")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        transitions.sort();
        transitions.dedup();
        Ok(Self {
            states: states.iter().map(|s| s.to_string()).collect(),
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            initial,
            accepting,
            transitions,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> &BTreeSet<usize> {
        &self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.contains(&q)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn letter_index(&self, letter: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|l| l == letter)
            .ok_or_else(|| Error::validation(format!("unknown letter `{letter}`")))
    }

    /// `{(q, q') : q' in delta(q, letter)}`.
    pub fn letter_relation(&self, letter: &str) -> Result<BTreeSet<(usize, usize)>> {
        let l = self.letter_index(letter)?;
        Ok(self.transitions.iter().filter(|t| t.letter == l).map(|t| (t.from, t.to)).collect())
    }
}

/// Letters paired with the regions they label. Points on shared boundaries
/// take the earliest declared letter.
#[derive(Clone, Debug)]
pub struct LabelingPartition {
    letters: Vec<(String, RegionUnion)>,
}

#[derive(Clone, Debug, Default)]
pub struct CoverageReport {
    pub samples: usize,
    pub unlabeled: Vec<Vec<f64>>,
    /// Points claimed by more than one letter (resolved by declaration order).
    pub multiply_claimed: usize,
}

impl LabelingPartition {
    pub fn new(letters: Vec<(String, RegionUnion)>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::validation("labeling needs at least one letter"));
        }
        let space = letters[0].1.space().clone();
        if letters.iter().any(|(_, r)| r.space() != &space) {
            return Err(Error::structural("labeling regions live in different spaces"));
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[(String, RegionUnion)] {
        &self.letters
    }

    pub fn label_of(&self, x: &[f64]) -> Option<&str> {
        self.letters.iter().find(|(_, r)| r.contains(x)).map(|(l, _)| l.as_str())
    }

    pub fn audit_coverage(&self, sys: &DynamicalSystem, samples: usize, seed: u64) -> Result<CoverageReport> {
        let batch = sample_set(
            sys.state_set(),
            sys.bounds(),
            samples,
            seed,
            &SamplerConfig { boundary_fraction: 0.2, ..Default::default() },
        )?;
        let mut rep = CoverageReport { samples, ..Default::default() };
        for p in batch.points {
            let claims = self.letters.iter().filter(|(_, r)| r.contains(&p)).count();
            if claims == 0 {
                rep.unlabeled.push(p);
            } else if claims > 1 {
                rep.multiply_claimed += 1;
            }
        }
        Ok(rep)
    }
}

/// One SOS condition of the product system `S x A`. `piece` indexes the
/// region pieces of the letter's labeling region.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProductInstance {
    /// Ranking nonnegativity at initial product states.
    RankInit { q0: usize },
    /// Ranking invariance along a product edge.
    RankStep { letter: usize, piece: usize, from: usize, to: usize },
    /// Non-increase along an edge leaving a non-accepting state.
    RankStay { letter: usize, piece: usize, from: usize, to: usize },
    /// Strict decrease along an edge leaving an accepting state.
    RankAccept { letter: usize, piece: usize, from: usize, to: usize },
    /// Closure contains every product transition.
    ClosureStep { letter: usize, piece: usize, from: usize, to: usize },
    /// Closure is transitive, for every target automaton state `target`.
    ClosureTrans { letter: usize, piece: usize, from: usize, to: usize, target: usize },
    /// Well-foundedness at accepting state `r` reached from initial `q0`.
    ClosureRecur { q0: usize, r: usize },
}

#[derive(Clone, Debug, Default)]
pub struct ProductInstances {
    pub ranking: Vec<ProductInstance>,
    pub closure: Vec<ProductInstance>,
    pub warnings: Vec<String>,
}

impl ProductInstances {
    pub fn count(&self, pred: impl Fn(&ProductInstance) -> bool) -> usize {
        self.ranking.iter().chain(&self.closure).filter(|i| pred(i)).count()
    }
}

/// Enumerate every product-edge constraint instance for the ranking and the
/// closure certificate families.
pub fn product_constraint_instances(
    sys: &DynamicalSystem,
    lab: &LabelingPartition,
    aut: &BuchiAutomaton,
    coverage_samples: usize,
) -> Result<ProductInstances> {
    if coverage_samples > 0 {
        let cov = lab.audit_coverage(sys, coverage_samples, 0)?;
        if let Some(p) = cov.unlabeled.first() {
            return Err(Error::validation(format!(
                "labeling does not cover the state set: {} of {} samples unlabeled, e.g. {p:?}",
                cov.unlabeled.len(),
                cov.samples
            )));
        }
    }
    let mut out = ProductInstances::default();
    if aut.initial().is_empty() {
        return Err(Error::validation("automaton has no initial state"));
    }
    if aut.accepting().is_empty() {
        out.warnings.push("automaton has no accepting state; the property holds vacuously".into());
    }
    for &q0 in aut.initial() {
        out.ranking.push(ProductInstance::RankInit { q0 });
    }
    for (name, region) in lab.letters() {
        let letter = aut.letter_index(name)?;
        for t in aut.transitions().iter().filter(|t| t.letter == letter) {
            for piece in 0..region.len() {
                let (from, to) = (t.from, t.to);
                out.ranking.push(ProductInstance::RankStep { letter, piece, from, to });
                out.ranking.push(if aut.is_accepting(from) {
                    ProductInstance::RankAccept { letter, piece, from, to }
                } else {
                    ProductInstance::RankStay { letter, piece, from, to }
                });
                out.closure.push(ProductInstance::ClosureStep { letter, piece, from, to });
                for target in 0..aut.states().len() {
                    out.closure.push(ProductInstance::ClosureTrans { letter, piece, from, to, target });
                }
            }
        }
    }
    for &q0 in aut.initial() {
        for &r in aut.accepting() {
            out.closure.push(ProductInstance::ClosureRecur { q0, r });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::box_set;

    pub(crate) fn fig2() -> BuchiAutomaton {
        BuchiAutomaton::new(
            &["q1", "q2", "q3", "q4"],
            &["a", "b", "c", "d"],
            &["q1"],
            &["q2", "q3", "q4"],
            &[
                ("q1", "d", "q1"),
                ("q1", "a", "q2"),
                ("q1", "b", "q3"),
                ("q1", "c", "q4"),
                ("q2", "a", "q2"),
                ("q3", "b", "q3"),
                ("q4", "d", "q1"),
                ("q4", "c", "q4"),
            ],
        )
        .unwrap()
    }

    fn simple() -> DynamicalSystem {
        let s = VariableSpace::indexed("x", 2);
        let f = vec![Polynomial::var(&s, 1), -&Polynomial::var(&s, 0)];
        let x = box_set(&s, &AxisBox::new(vec![-4.0, -4.0], vec![4.0, 4.0]).unwrap(), "X").unwrap();
        let x0 = box_set(&s, &AxisBox::new(vec![0.0, -3.5], vec![0.5, -3.0]).unwrap(), "X0").unwrap();
        let xu = RegionUnion::from_boxes(
            &s,
            &[
                AxisBox::new(vec![-4.0, 1.0], vec![-1.0, 4.0]).unwrap(),
                AxisBox::new(vec![1.0, -4.0], vec![4.0, -1.0]).unwrap(),
            ],
            "Xu",
        )
        .unwrap();
        DynamicalSystem::new(&s, f, x, x0).unwrap().with_region("unsafe", xu).unwrap()
    }

    #[test]
    fn letter_relations_of_fig2() {
        let a = fig2();
        assert_eq!(a.letter_relation("d").unwrap(), BTreeSet::from([(0, 0), (3, 0)]));
        assert_eq!(a.letter_relation("a").unwrap(), BTreeSet::from([(0, 1), (1, 1)]));
        assert!(a.letter_relation("z").is_err());
        let lonely = BuchiAutomaton::new(&["q"], &["a", "b"], &["q"], &[], &[("q", "a", "q")]).unwrap();
        assert!(lonely.letter_relation("b").unwrap().is_empty());
    }

    #[test]
    fn letter_relations_partition_delta() {
        let a = fig2();
        let total: usize = a.alphabet().iter().map(|l| a.letter_relation(l).unwrap().len()).sum();
        assert_eq!(total, a.transitions().len());
    }

    #[test]
    fn rotation_returns_after_four_steps() {
        let sys = simple();
        let tr = simulate(&sys, &[0.25, -3.25], 8).unwrap();
        assert!(!tr.truncated);
        assert_eq!(tr.states[1], vec![-3.25, -0.25]);
        assert_eq!(tr.states[4], tr.states[0]);
        assert!(tr.visits("unsafe").is_empty());
    }

    #[test]
    fn simulation_composes() {
        let sys = simple();
        let long = simulate(&sys, &[0.1, -3.3], 10).unwrap();
        let half = simulate(&sys, &[0.1, -3.3], 5).unwrap();
        let rest = simulate(&sys, half.states.last().unwrap(), 5).unwrap();
        assert_eq!(&long.states[5..], &rest.states[..]);
    }

    #[test]
    fn fixed_point_is_constant() {
        let s = VariableSpace::indexed("x", 1);
        let f = vec![Polynomial::parse(&s, "0.5*x1").unwrap()];
        let x = box_set(&s, &AxisBox::new(vec![-1.0], vec![1.0]).unwrap(), "X").unwrap();
        let sys = DynamicalSystem::new(&s, f, x.clone(), x).unwrap();
        let tr = simulate(&sys, &[0.0], 5).unwrap();
        assert!(tr.states.iter().all(|p| p == &vec![0.0]));
    }

    #[test]
    fn one_state_self_loop_instances() {
        let sys = simple();
        let s = sys.space().clone();
        let whole = RegionUnion::from_boxes(&s, &[sys.bounds().clone()], "all").unwrap();
        let lab = LabelingPartition::new(vec![("a".into(), whole)]).unwrap();
        let aut = BuchiAutomaton::new(&["q"], &["a"], &["q"], &["q"], &[("q", "a", "q")]).unwrap();
        let inst = product_constraint_instances(&sys, &lab, &aut, 500).unwrap();
        assert_eq!(inst.count(|i| matches!(i, ProductInstance::ClosureStep { .. })), 1);
        assert_eq!(inst.count(|i| matches!(i, ProductInstance::ClosureTrans { .. })), 1);
        assert_eq!(inst.count(|i| matches!(i, ProductInstance::ClosureRecur { .. })), 1);
    }

    #[test]
    fn uncovered_labeling_is_rejected() {
        let sys = simple();
        let s = sys.space().clone();
        let part =
            RegionUnion::from_boxes(&s, &[AxisBox::new(vec![-4.0, -4.0], vec![0.0, 4.0]).unwrap()], "half").unwrap();
        let lab = LabelingPartition::new(vec![("a".into(), part)]).unwrap();
        let aut = BuchiAutomaton::new(&["q"], &["a"], &["q"], &["q"], &[("q", "a", "q")]).unwrap();
        assert!(product_constraint_instances(&sys, &lab, &aut, 500).is_err());
    }

    #[test]
    fn no_accepting_state_warns() {
        let sys = simple();
        let s = sys.space().clone();
        let whole = RegionUnion::from_boxes(&s, &[sys.bounds().clone()], "all").unwrap();
        let lab = LabelingPartition::new(vec![("a".into(), whole)]).unwrap();
        let aut = BuchiAutomaton::new(&["q"], &["a"], &["q"], &[], &[("q", "a", "q")]).unwrap();
        let inst = product_constraint_instances(&sys, &lab, &aut, 0).unwrap();
        assert_eq!(inst.count(|i| matches!(i, ProductInstance::ClosureRecur { .. })), 0);
        assert_eq!(inst.warnings.len(), 1);
    }
}
