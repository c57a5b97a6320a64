//! Action schemas with conditional probabilistic effects, grounding,
//! executability semantics and the split-action transformation used by
//! the relaxed planning graph.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::symbols::{AtomId, ConstId, PredId, SymbolTable, TypeId, VarId};

/// Tolerance used when checking that probability masses sum to one.
pub const MASS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarId),
    Const(ConstId),
}

impl Term {
    pub fn as_const(self) -> Option<ConstId> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn is_var(self) -> bool {
        matches!(self, Term::Var(_))
    }
}

/// A possibly lifted literal. Inside an [`ActionSchema`] the variables
/// index the schema parameters; inside a plan they are plan variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub pred: PredId,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(pred: PredId, args: Vec<Term>) -> Self {
        Literal {
            pred,
            args,
            negated: false,
        }
    }

    pub fn negated(&self) -> Self {
        Literal {
            pred: self.pred,
            args: self.args.clone(),
            negated: !self.negated,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    /// Replace parameter-indexed variables with the given instantiation.
    pub fn substitute(&self, args: &[Term]) -> Literal {
        Literal {
            pred: self.pred,
            args: self
                .args
                .iter()
                .map(|t| match *t {
                    Term::Var(v) => args[v.index()],
                    c => c,
                })
                .collect(),
            negated: self.negated,
        }
    }

    pub fn display(&self, table: &SymbolTable) -> String {
        let mut s = String::new();
        if self.negated {
            s.push_str("(not ");
        }
        let _ = write!(s, "({}", table.pred_name(self.pred));
        for arg in &self.args {
            match *arg {
                Term::Const(c) => {
                    let _ = write!(s, " {}", table.const_name(c));
                }
                Term::Var(v) => {
                    let _ = write!(s, " {}", v);
                }
            }
        }
        s.push(')');
        if self.negated {
            s.push(')');
        }
        s
    }
}

/// An equality or disequality constraint between schema terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamConstraint {
    Eq(Term, Term),
    Neq(Term, Term),
}

/// One probabilistic outcome of an effect branch. `adds` and `deletes`
/// hold positive atoms; a deleted atom is removed from the state.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeEffect {
    pub probability: f64,
    pub adds: Vec<Literal>,
    pub deletes: Vec<Literal>,
}

impl OutcomeEffect {
    pub fn is_empty(&self) -> bool {
        self.adds.is_empty() && self.deletes.is_empty()
    }
}

/// A conditional effect case: when `condition` holds, exactly one of the
/// `outcomes` occurs, chosen by its probability. Branch conditions within
/// a schema are pairwise mutually exclusive after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectBranch {
    pub condition: Vec<Literal>,
    pub outcomes: Vec<OutcomeEffect>,
}

impl EffectBranch {
    pub fn mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaParam {
    pub name: String,
    pub ty: TypeId,
}

/// A lifted probabilistic operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<SchemaParam>,
    pub precond: Vec<Literal>,
    pub constraints: Vec<ParamConstraint>,
    pub branches: Vec<EffectBranch>,
}

impl ActionSchema {
    /// Checks the structural invariants the normalizer must establish:
    /// outcome masses sum to one per branch, adds and deletes are
    /// disjoint, every variable is a declared parameter, and branch
    /// conditions are pairwise exclusive on some literal.
    pub fn validate(&self) -> Result<(), String> {
        let nparams = self.params.len() as u32;
        let check_var = |lit: &Literal| -> Result<(), String> {
            for t in &lit.args {
                if let Term::Var(v) = *t {
                    if v.0 >= nparams {
                        return Err(format!("{}: variable out of range", self.name));
                    }
                }
            }
            Ok(())
        };
        for lit in &self.precond {
            check_var(lit)?;
        }
        for branch in &self.branches {
            let mass = branch.mass();
            if (mass - 1.0).abs() > MASS_EPS {
                return Err(format!("{}: branch mass {} != 1", self.name, mass));
            }
            for lit in &branch.condition {
                check_var(lit)?;
            }
            for out in &branch.outcomes {
                if out.probability <= 0.0 || out.probability > 1.0 + MASS_EPS {
                    return Err(format!("{}: outcome probability out of range", self.name));
                }
                for lit in out.adds.iter().chain(&out.deletes) {
                    check_var(lit)?;
                    if lit.negated {
                        return Err(format!("{}: effect literals must be positive", self.name));
                    }
                }
                let adds: BTreeSet<&Literal> = out.adds.iter().collect();
                if out.deletes.iter().any(|d| adds.contains(d)) {
                    return Err(format!("{}: add and delete overlap", self.name));
                }
            }
        }
        for (i, a) in self.branches.iter().enumerate() {
            for b in self.branches.iter().skip(i + 1) {
                if !conditions_exclusive(&a.condition, &b.condition) {
                    return Err(format!("{}: branch conditions overlap", self.name));
                }
            }
        }
        Ok(())
    }
}

/// Two conjunctions are syntactically exclusive when one contains the
/// negation of a literal in the other.
pub fn conditions_exclusive(a: &[Literal], b: &[Literal]) -> bool {
    a.iter().any(|la| {
        b.iter()
            .any(|lb| la.pred == lb.pred && la.args == lb.args && la.negated != lb.negated)
    })
}

/// A deterministic view of one nonempty (branch, outcome) pair of a
/// schema. Split actions exist only to feed the relaxed planning graph;
/// plans always contain the full original action.
#[derive(Debug, Clone)]
pub struct SplitAction {
    pub schema_name: String,
    pub branch: usize,
    pub outcome: usize,
    pub params: Vec<SchemaParam>,
    /// Schema precondition conjoined with the branch condition.
    pub precond: Vec<Literal>,
    pub constraints: Vec<ParamConstraint>,
    pub adds: Vec<Literal>,
    pub deletes: Vec<Literal>,
}

impl SplitAction {
    pub fn name(&self) -> String {
        format!(
            "{}-{}-{}",
            self.schema_name,
            self.branch + 1,
            self.outcome + 1
        )
    }
}

/// Splits a schema into one deterministic action per (branch, outcome)
/// pair with a nonempty effect list.
pub fn split_schema(schema: &ActionSchema) -> Vec<SplitAction> {
    let mut splits = Vec::new();
    for (bi, branch) in schema.branches.iter().enumerate() {
        for (oi, outcome) in branch.outcomes.iter().enumerate() {
            if outcome.is_empty() {
                continue;
            }
            let mut precond = schema.precond.clone();
            precond.extend(branch.condition.iter().cloned());
            splits.push(SplitAction {
                schema_name: schema.name.clone(),
                branch: bi,
                outcome: oi,
                params: schema.params.clone(),
                precond,
                constraints: schema.constraints.clone(),
                adds: outcome.adds.clone(),
                deletes: outcome.deletes.clone(),
            });
        }
    }
    splits
}

/// All type-consistent parameter substitutions for a schema, with
/// substitutions that falsify an (in)equality constraint pruned.
pub fn ground_substitutions(schema: &ActionSchema, table: &SymbolTable) -> Vec<Vec<ConstId>> {
    let domains: Vec<Vec<ConstId>> = schema
        .params
        .iter()
        .map(|p| table.consts_of_type(p.ty).collect())
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(domains.len());
    enumerate(&domains, 0, &mut current, &mut |args| {
        if constraints_hold(&schema.constraints, args) {
            out.push(args.to_vec());
        }
    });
    out
}

fn enumerate(
    domains: &[Vec<ConstId>],
    depth: usize,
    current: &mut Vec<ConstId>,
    sink: &mut impl FnMut(&[ConstId]),
) {
    if depth == domains.len() {
        sink(current);
        return;
    }
    for &c in &domains[depth] {
        current.push(c);
        enumerate(domains, depth + 1, current, sink);
        current.pop();
    }
}

fn constraints_hold(constraints: &[ParamConstraint], args: &[ConstId]) -> bool {
    let resolve = |t: Term| -> ConstId {
        match t {
            Term::Const(c) => c,
            Term::Var(v) => args[v.index()],
        }
    };
    constraints.iter().all(|c| match *c {
        ParamConstraint::Eq(a, b) => resolve(a) == resolve(b),
        ParamConstraint::Neq(a, b) => resolve(a) != resolve(b),
    })
}

/// A ground world state under the closed-world assumption: an atom is
/// true iff it is in the set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct WorldState {
    pub atoms: BTreeSet<AtomId>,
}

impl WorldState {
    pub fn holds(&self, lit: GroundLit) -> bool {
        self.atoms.contains(&lit.atom) != lit.negated
    }

    pub fn holds_all(&self, lits: &[GroundLit]) -> bool {
        lits.iter().all(|&l| self.holds(l))
    }
}

/// A finite probability distribution over world states.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    pub states: Vec<(WorldState, f64)>,
}

impl InitialDistribution {
    /// Builds a distribution, merging duplicate states and checking that
    /// the masses sum to one.
    pub fn new(states: Vec<(WorldState, f64)>) -> Result<Self, String> {
        let mut merged: Vec<(WorldState, f64)> = Vec::new();
        for (state, p) in states {
            if p <= 0.0 {
                return Err(format!("state probability {} must be positive", p));
            }
            match merged.iter_mut().find(|(s, _)| *s == state) {
                Some((_, q)) => *q += p,
                None => merged.push((state, p)),
            }
        }
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_EPS {
            return Err(format!("initial masses sum to {}, expected 1", total));
        }
        Ok(InitialDistribution { states: merged })
    }

    pub fn single(state: WorldState) -> Self {
        InitialDistribution {
            states: vec![(state, 1.0)],
        }
    }

    /// True when the atom holds in at least one initial state.
    pub fn possibly_true(&self, atom: AtomId) -> bool {
        self.states.iter().any(|(s, _)| s.atoms.contains(&atom))
    }

    /// True when the atom is absent from at least one initial state.
    pub fn possibly_false(&self, atom: AtomId) -> bool {
        self.states.iter().any(|(s, _)| !s.atoms.contains(&atom))
    }

    /// The highest-mass state, ties broken by listing order.
    pub fn intended(&self) -> &WorldState {
        let mut best = 0;
        for (i, (_, p)) in self.states.iter().enumerate() {
            if *p > self.states[best].1 {
                best = i;
            }
        }
        &self.states[best].0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundLit {
    pub atom: AtomId,
    pub negated: bool,
}

/// A ground atom, prior to interning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: PredId,
    pub args: Vec<ConstId>,
}

impl GroundAtom {
    pub fn display(&self, table: &SymbolTable) -> String {
        let mut s = format!("({}", table.pred_name(self.pred));
        for &c in &self.args {
            let _ = write!(s, " {}", table.const_name(c));
        }
        s.push(')');
        s
    }
}

/// An index of every type-consistent ground atom of a problem.
#[derive(Debug, Clone, Default)]
pub struct AtomTable {
    pub atoms: Vec<GroundAtom>,
    index: std::collections::BTreeMap<GroundAtom, AtomId>,
}

impl AtomTable {
    /// Enumerates all atoms formed from the declared predicates and the
    /// constants compatible with their parameter types.
    pub fn build(table: &SymbolTable) -> Self {
        let mut atoms = AtomTable::default();
        for (pi, pred) in table.preds.iter().enumerate() {
            let pred_id = PredId(pi as u32);
            let domains: Vec<Vec<ConstId>> = pred
                .param_types
                .iter()
                .map(|&ty| table.consts_of_type(ty).collect())
                .collect();
            let mut current = Vec::with_capacity(domains.len());
            enumerate(&domains, 0, &mut current, &mut |args| {
                atoms.intern(GroundAtom {
                    pred: pred_id,
                    args: args.to_vec(),
                });
            });
        }
        atoms
    }

    pub fn intern(&mut self, atom: GroundAtom) -> AtomId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(atom.clone());
        self.index.insert(atom, id);
        id
    }

    pub fn lookup(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, id: AtomId) -> &GroundAtom {
        &self.atoms[id.index()]
    }

    /// Resolves a ground literal to its interned form. Returns `None`
    /// when the atom falls outside the typed enumeration.
    pub fn resolve(&self, lit: &Literal) -> Option<GroundLit> {
        let args: Option<Vec<ConstId>> = lit.args.iter().map(|t| t.as_const()).collect();
        let atom = GroundAtom {
            pred: lit.pred,
            args: args?,
        };
        Some(GroundLit {
            atom: self.lookup(&atom)?,
            negated: lit.negated,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GroundOutcome {
    pub probability: f64,
    pub adds: Vec<AtomId>,
    pub deletes: Vec<AtomId>,
}

#[derive(Debug, Clone)]
pub struct GroundBranch {
    pub condition: Vec<GroundLit>,
    pub outcomes: Vec<GroundOutcome>,
}

/// A fully instantiated action, with literals resolved to atom ids.
#[derive(Debug, Clone)]
pub struct GroundAction {
    pub schema_index: usize,
    pub args: Vec<ConstId>,
    pub precond: Vec<GroundLit>,
    pub branches: Vec<GroundBranch>,
}

impl GroundAction {
    pub fn applicable(&self, state: &WorldState) -> bool {
        state.holds_all(&self.precond)
    }

    /// The branch whose condition holds in `state`, if any. Branch
    /// conditions are mutually exclusive, so at most one matches.
    pub fn active_branch(&self, state: &WorldState) -> Option<&GroundBranch> {
        self.branches.iter().find(|b| state.holds_all(&b.condition))
    }
}

/// How `execute` picks among the outcomes of the active branch.
pub enum OutcomeChoice<'a> {
    /// Sample by outcome probability from the given generator.
    Sample(&'a mut rand_chacha::ChaCha8Rng),
    /// Take the outcome at this index in the active branch.
    Index(usize),
    /// Take the highest-probability outcome, ties to the first listed.
    Intended,
}

/// Applies a ground action to a state. An action whose precondition does
/// not hold leaves the state unchanged instead of failing; the same goes
/// for a state matching none of the branch conditions. Deletes are
/// applied before adds.
pub fn execute(state: &WorldState, action: &GroundAction, choice: OutcomeChoice<'_>) -> WorldState {
    let mut next = state.clone();
    execute_in_place(&mut next, action, choice);
    next
}

/// `execute` without the copy, for simulation loops.
pub fn execute_in_place(state: &mut WorldState, action: &GroundAction, choice: OutcomeChoice<'_>) {
    if !action.applicable(state) {
        return;
    }
    let Some(branch) = action.active_branch(state) else {
        return;
    };
    let outcome = match choice {
        OutcomeChoice::Sample(rng) => sample_outcome(branch, rng),
        OutcomeChoice::Index(i) => &branch.outcomes[i],
        OutcomeChoice::Intended => intended_outcome(branch),
    };
    for d in &outcome.deletes {
        state.atoms.remove(d);
    }
    for &a in &outcome.adds {
        state.atoms.insert(a);
    }
}

pub fn apply_outcome(state: &WorldState, outcome: &GroundOutcome) -> WorldState {
    let mut atoms = state.atoms.clone();
    for &d in &outcome.deletes {
        atoms.remove(&d);
    }
    for &a in &outcome.adds {
        atoms.insert(a);
    }
    WorldState { atoms }
}

fn sample_outcome<'b>(
    branch: &'b GroundBranch,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> &'b GroundOutcome {
    let roll: f64 = rng.random();
    let mut acc = 0.0;
    for outcome in &branch.outcomes {
        acc += outcome.probability;
        if roll < acc {
            return outcome;
        }
    }
    branch.outcomes.last().expect("branch has outcomes")
}

pub fn intended_outcome(branch: &GroundBranch) -> &GroundOutcome {
    let mut best = 0;
    for (i, o) in branch.outcomes.iter().enumerate() {
        if o.probability > branch.outcomes[best].probability {
            best = i;
        }
    }
    &branch.outcomes[best]
}
