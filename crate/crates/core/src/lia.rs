//! Conjunctive linear integer arithmetic over arbitrary-precision integers.
//!
//! The engine is a rational-relaxation simplex (exact `BigRational`
//! arithmetic, Bland's rule) with branch-and-bound on fractional variables.
//! Blocking clauses exclude previously tried combinations of variable
//! assignments; they are honored lazily by branching on one disagreeing
//! variable per clause. A node budget converts potential blowup into an
//! honest `Unknown`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

pub type VarId = usize;

pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
}

/// `sum(coeffs[v] * v) REL constant`. Zero coefficients are dropped at
/// construction; a constraint with no variables left is trivially true or
/// false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<VarId, BigInt>,
    pub rel: Relation,
    pub constant: BigInt,
}

impl LinearConstraint {
    pub fn new(coeffs: BTreeMap<VarId, BigInt>, rel: Relation, constant: BigInt) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        LinearConstraint {
            coeffs,
            rel,
            constant,
        }
    }

    pub fn eq(var: VarId, value: impl Into<BigInt>) -> Self {
        Self::new(
            BTreeMap::from([(var, BigInt::one())]),
            Relation::Eq,
            value.into(),
        )
    }

    /// `var <= value`
    pub fn upper(var: VarId, value: impl Into<BigInt>) -> Self {
        Self::new(
            BTreeMap::from([(var, BigInt::one())]),
            Relation::Le,
            value.into(),
        )
    }

    /// `var >= value`, encoded as `-var <= -value`.
    pub fn lower(var: VarId, value: impl Into<BigInt>) -> Self {
        Self::new(
            BTreeMap::from([(var, BigInt::from(-1))]),
            Relation::Le,
            -value.into(),
        )
    }

    /// `Some(truth)` if the constraint has no variables.
    pub fn trivial_truth(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        Some(match self.rel {
            Relation::Eq => self.constant.is_zero(),
            Relation::Le => !self.constant.is_negative(),
        })
    }

    pub fn eval(&self, asg: &IntAssignment) -> bool {
        let lhs: BigInt = self.coeffs.iter().map(|(v, c)| c * asg.get(*v)).sum();
        match self.rel {
            Relation::Eq => lhs == self.constant,
            Relation::Le => lhs <= self.constant,
        }
    }
}

/// A total integer assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntAssignment {
    pub values: BTreeMap<VarId, BigInt>,
}

impl IntAssignment {
    pub fn get(&self, v: VarId) -> BigInt {
        self.values.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }
}

/// "Not all of these equalities hold simultaneously."
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingClause {
    pub blocked: BTreeMap<VarId, BigInt>,
}

impl BlockingClause {
    pub fn new(blocked: BTreeMap<VarId, BigInt>) -> Self {
        debug_assert!(!blocked.is_empty(), "blocking clause must be nonempty");
        BlockingClause { blocked }
    }

    /// True when the assignment agrees on every blocked variable, i.e. the
    /// clause is violated.
    pub fn violated_by(&self, asg: &IntAssignment) -> bool {
        self.blocked.iter().all(|(v, b)| asg.get(*v) == *b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiaResult {
    Sat(IntAssignment),
    Unsat,
    /// Node budget or deadline exhausted before a verdict.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct LiaLimits {
    pub max_nodes: u64,
    pub deadline: Option<Instant>,
}

impl Default for LiaLimits {
    fn default() -> Self {
        LiaLimits {
            max_nodes: DEFAULT_NODE_BUDGET,
            deadline: None,
        }
    }
}

/// Decides a conjunction of constraints under blocking clauses and
/// nonnegativity conditions.
pub fn check_sat(
    constraints: &[LinearConstraint],
    blocks: &[BlockingClause],
    nonneg: &BTreeSet<VarId>,
    limits: &LiaLimits,
) -> LiaResult {
    solve(constraints, blocks, nonneg, None, limits)
}

/// Finds a model minimizing `objective` (which must be bounded below, as all
/// length variables are).
pub fn minimize(
    objective: VarId,
    constraints: &[LinearConstraint],
    blocks: &[BlockingClause],
    nonneg: &BTreeSet<VarId>,
    limits: &LiaLimits,
) -> LiaResult {
    solve(constraints, blocks, nonneg, Some(objective), limits)
}

// ---------------------------------------------------------------------------
// Integer presolve
// ---------------------------------------------------------------------------

fn bigint_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.gcd(b)
}

/// One eliminated variable: `var = coeffs . vars + constant`, with the
/// right-hand side ranging over surviving variables only.
#[derive(Debug, Clone)]
struct Substitution {
    var: VarId,
    coeffs: BTreeMap<VarId, BigInt>,
    constant: BigInt,
}

/// Result of integer preprocessing: residual rows plus the back-substitution
/// chain for eliminated variables.
struct Presolved {
    rows: Vec<LinearConstraint>,
    subs: Vec<Substitution>,
}

impl Presolved {
    /// Maps a constraint over original variables onto the residual space.
    fn rewrite(&self, c: &LinearConstraint) -> LinearConstraint {
        let mut coeffs = c.coeffs.clone();
        let mut constant = c.constant.clone();
        for sub in &self.subs {
            if let Some(factor) = coeffs.remove(&sub.var) {
                for (v, sc) in &sub.coeffs {
                    *coeffs.entry(*v).or_default() += &factor * sc;
                }
                // var = rhs + k  contributes  factor * k to the left side,
                // i.e. subtracts from the right-hand constant.
                constant -= &factor * &sub.constant;
            }
        }
        LinearConstraint::new(coeffs, c.rel, constant)
    }

    /// Fills in the eliminated variables of an assignment over residual
    /// variables.
    fn reconstruct(&self, asg: &mut IntAssignment) {
        for sub in self.subs.iter().rev() {
            let value: BigInt = sub
                .coeffs
                .iter()
                .map(|(v, c)| c * asg.get(*v))
                .sum::<BigInt>()
                + &sub.constant;
            asg.values.insert(sub.var, value);
        }
    }
}

/// Integer presolve: per-row gcd tightening (an equality whose coefficient
/// gcd does not divide its constant is unsatisfiable; an inequality rounds
/// its bound down), implied equalities recovered from opposite inequality
/// pairs, then repeated elimination of equalities with a unit coefficient.
/// This is what catches divisibility conflicts that plain branch-and-bound
/// would chase forever.
fn presolve(constraints: Vec<LinearConstraint>, nonneg: &BTreeSet<VarId>) -> Result<Presolved, ()> {
    let mut rows: Vec<LinearConstraint> = Vec::with_capacity(constraints.len());
    let mut subs: Vec<Substitution> = Vec::new();
    let mut pending: Vec<LinearConstraint> = constraints;
    // Each pass normalizes rows and eliminates at most one variable; the
    // loop ends when no equality has a unit coefficient.
    loop {
        rows.clear();
        for c in pending.drain(..) {
            match c.trivial_truth() {
                Some(true) => continue,
                Some(false) => return Err(()),
                None => {}
            }
            // gcd tightening
            let g = c
                .coeffs
                .values()
                .fold(BigInt::zero(), |acc, v| bigint_gcd(&acc, v));
            debug_assert!(g.is_positive());
            let tightened = if g > BigInt::one() {
                let coeffs = c.coeffs.iter().map(|(v, x)| (*v, x / &g)).collect();
                match c.rel {
                    Relation::Eq => {
                        if (&c.constant % &g).is_zero() {
                            LinearConstraint::new(coeffs, Relation::Eq, &c.constant / &g)
                        } else {
                            return Err(());
                        }
                    }
                    Relation::Le => {
                        use num_integer::Integer;
                        LinearConstraint::new(coeffs, Relation::Le, c.constant.div_floor(&g))
                    }
                }
            } else {
                c
            };
            match tightened.trivial_truth() {
                Some(true) => {}
                Some(false) => return Err(()),
                None => rows.push(tightened),
            }
        }

        // Opposite inequality pairs imply an equality; recovering it feeds
        // the unit elimination below.
        let mut i = 0;
        while i < rows.len() {
            if rows[i].rel == Relation::Le {
                let mut j = i + 1;
                while j < rows.len() {
                    let opposite = rows[j].rel == Relation::Le
                        && rows[i].constant == -&rows[j].constant
                        && rows[i].coeffs.len() == rows[j].coeffs.len()
                        && rows[i]
                            .coeffs
                            .iter()
                            .all(|(v, c)| rows[j].coeffs.get(v).map(|d| *c == -d).unwrap_or(false));
                    if opposite {
                        rows[i].rel = Relation::Eq;
                        rows.swap_remove(j);
                        break;
                    }
                    j += 1;
                }
            }
            i += 1;
        }

        // Find an equality with a +-1 coefficient to eliminate.
        let pick = rows.iter().position(|c| {
            c.rel == Relation::Eq
                && c.coeffs
                    .values()
                    .any(|v| v.magnitude() == &num_bigint::BigUint::from(1u32))
        });
        let Some(row_idx) = pick else {
            return Ok(Presolved { rows, subs });
        };
        let row = rows.swap_remove(row_idx);
        let (&var, coeff) = row
            .coeffs
            .iter()
            .find(|(_, v)| v.magnitude() == &num_bigint::BigUint::from(1u32))
            .expect("unit coefficient present");
        // a*var + rest = b with a = +-1: var = (b - rest) / a.
        let a_pos = coeff.is_positive();
        let mut expr: BTreeMap<VarId, BigInt> = BTreeMap::new();
        for (v, c) in &row.coeffs {
            if *v != var {
                expr.insert(*v, if a_pos { -c } else { c.clone() });
            }
        }
        let constant = if a_pos {
            row.constant.clone()
        } else {
            -row.constant.clone()
        };
        // Keep earlier substitution right-hand sides over surviving
        // variables only.
        let new_sub = Substitution {
            var,
            coeffs: expr,
            constant,
        };
        for sub in &mut subs {
            if let Some(factor) = sub.coeffs.remove(&var) {
                for (v, c) in &new_sub.coeffs {
                    let entry = sub.coeffs.entry(*v).or_default();
                    *entry += &factor * c;
                    if entry.is_zero() {
                        sub.coeffs.remove(v);
                    }
                }
                sub.constant += &factor * &new_sub.constant;
            }
        }
        // Substitute into the remaining rows.
        for c in rows.drain(..) {
            let mut coeffs = c.coeffs;
            let mut constant = c.constant;
            if let Some(factor) = coeffs.remove(&var) {
                for (v, sc) in &new_sub.coeffs {
                    *coeffs.entry(*v).or_default() += &factor * sc;
                }
                constant -= &factor * &new_sub.constant;
            }
            pending.push(LinearConstraint::new(coeffs, c.rel, constant));
        }
        // An eliminated nonnegative variable keeps its sign constraint.
        if nonneg.contains(&var) {
            let negated: BTreeMap<VarId, BigInt> =
                new_sub.coeffs.iter().map(|(v, c)| (*v, -c)).collect();
            pending.push(LinearConstraint::new(
                negated,
                Relation::Le,
                new_sub.constant.clone(),
            ));
        }
        subs.push(new_sub);
    }
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

fn solve(
    constraints: &[LinearConstraint],
    blocks: &[BlockingClause],
    nonneg: &BTreeSet<VarId>,
    objective: Option<VarId>,
    limits: &LiaLimits,
) -> LiaResult {
    // The original variable universe, kept stable across nodes so every
    // reconstructed assignment is total.
    let mut all_vars: BTreeSet<VarId> = nonneg.iter().copied().collect();
    for c in constraints {
        all_vars.extend(c.coeffs.keys().copied());
    }
    for b in blocks {
        all_vars.extend(b.blocked.keys().copied());
    }
    if let Some(obj) = objective {
        all_vars.insert(obj);
    }

    // Sign constraints participate in presolve so that implied equalities
    // like `v <= 0, v >= 0` collapse and substitute through.
    let nonneg_rows: Vec<LinearConstraint> = nonneg
        .iter()
        .map(|v| LinearConstraint::lower(*v, 0))
        .collect();

    let mut stack: Vec<Vec<LinearConstraint>> = vec![Vec::new()];
    let mut nodes: u64 = 0;
    let mut incumbent: Option<(BigRational, IntAssignment)> = None;

    while let Some(extra) = stack.pop() {
        nodes += 1;
        if nodes > limits.max_nodes {
            return LiaResult::Unknown;
        }
        if let Some(deadline) = limits.deadline {
            if Instant::now() >= deadline {
                return LiaResult::Unknown;
            }
        }

        // Per-node integer presolve over base + branching constraints.
        let mut node_rows = constraints.to_vec();
        node_rows.extend(extra.iter().cloned());
        node_rows.extend(nonneg_rows.iter().cloned());
        let presolved = match presolve(node_rows, nonneg) {
            Ok(p) => p,
            Err(()) => continue,
        };

        let objective_expr: Option<(BTreeMap<VarId, BigInt>, BigInt)> = objective.map(|obj| {
            let as_constraint = LinearConstraint::new(
                BTreeMap::from([(obj, BigInt::one())]),
                Relation::Eq,
                BigInt::zero(),
            );
            let rewritten = presolved.rewrite(&as_constraint);
            // After rewriting, obj = coeffs . x - constant.
            (rewritten.coeffs, -rewritten.constant)
        });

        let eliminated: BTreeSet<VarId> = presolved.subs.iter().map(|s| s.var).collect();
        let vars: Vec<VarId> = {
            let mut set: BTreeSet<VarId> = BTreeSet::new();
            for c in &presolved.rows {
                set.extend(c.coeffs.keys().copied());
            }
            for sub in &presolved.subs {
                set.extend(sub.coeffs.keys().copied());
            }
            if let Some((coeffs, _)) = &objective_expr {
                set.extend(coeffs.keys().copied());
            }
            set.extend(all_vars.iter().copied());
            set.into_iter()
                .filter(|v| !eliminated.contains(v))
                .collect()
        };
        let index: BTreeMap<VarId, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let problem = Problem {
            vars: &vars,
            index: &index,
            nonneg,
            base: &presolved.rows,
            objective: objective_expr.as_ref(),
        };

        let (values, obj_value) = match problem.solve_relaxation() {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return LiaResult::Unknown,
            LpOutcome::Optimal(values, obj) => (values, obj),
        };

        if let Some((best, _)) = &incumbent {
            // The LP optimum bounds every integer solution in this subtree.
            if obj_value >= *best {
                continue;
            }
        }

        // Branch on the first fractional variable, in the original space.
        if let Some(i) = values.iter().position(|v| !v.is_integer()) {
            let var = vars[i];
            let floor = values[i].floor().to_integer();
            let mut below = extra.clone();
            below.push(LinearConstraint::upper(var, floor.clone()));
            let mut above = extra;
            above.push(LinearConstraint::lower(var, floor + 1));
            stack.push(above);
            stack.push(below);
            continue;
        }

        let mut asg = IntAssignment {
            values: vars
                .iter()
                .zip(values.iter())
                .map(|(v, x)| (*v, x.to_integer()))
                .collect(),
        };
        presolved.reconstruct(&mut asg);
        asg.values.retain(|v, _| all_vars.contains(v));
        for v in &all_vars {
            asg.values.entry(*v).or_default();
        }

        // Blocking clauses are lazy constraints: branch on the first
        // violated one, one disagreeing variable per child.
        if let Some(block) = blocks.iter().find(|b| b.violated_by(&asg)) {
            for (v, b) in block.blocked.iter().rev() {
                let mut above = extra.clone();
                above.push(LinearConstraint::lower(*v, b + 1));
                stack.push(above);
                let mut below = extra.clone();
                below.push(LinearConstraint::upper(*v, b - 1));
                stack.push(below);
            }
            continue;
        }

        // Self-check in test builds: the assignment satisfies everything.
        debug_assert!(
            constraints.iter().all(|c| c.eval(&asg)),
            "integer solution violates a constraint"
        );
        debug_assert!(
            nonneg.iter().all(|v| !asg.get(*v).is_negative()),
            "integer solution violates nonnegativity"
        );

        match objective {
            None => return LiaResult::Sat(asg),
            Some(_) => {
                let better = incumbent
                    .as_ref()
                    .map(|(best, _)| obj_value < *best)
                    .unwrap_or(true);
                if better {
                    incumbent = Some((obj_value, asg));
                }
            }
        }
    }

    match incumbent {
        Some((_, asg)) => LiaResult::Sat(asg),
        None => LiaResult::Unsat,
    }
}

struct Problem<'a> {
    vars: &'a [VarId],
    index: &'a BTreeMap<VarId, usize>,
    nonneg: &'a BTreeSet<VarId>,
    base: &'a [LinearConstraint],
    /// Linear objective expression plus constant offset.
    objective: Option<&'a (BTreeMap<VarId, BigInt>, BigInt)>,
}

enum LpOutcome {
    Infeasible,
    Unbounded,
    /// Values for the problem variables (in `vars` order) and the objective
    /// value.
    Optimal(Vec<BigRational>, BigRational),
}

impl<'a> Problem<'a> {
    /// Solves the LP relaxation of the presolved rows.
    fn solve_relaxation(&self) -> LpOutcome {
        // Free variables split as x = x+ - x-; nonnegative ones map directly.
        // Column layout: for each problem var, one or two columns.
        let mut col_of_var: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.vars.len());
        let mut ncols = 0;
        for v in self.vars {
            if self.nonneg.contains(v) {
                col_of_var.push((ncols, None));
                ncols += 1;
            } else {
                col_of_var.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }

        let mut rows: Vec<(Vec<BigRational>, Relation, BigRational)> = Vec::new();
        for c in self.base.iter() {
            if let Some(truth) = c.trivial_truth() {
                if !truth {
                    return LpOutcome::Infeasible;
                }
                continue;
            }
            let mut row = vec![BigRational::zero(); ncols];
            for (v, coeff) in &c.coeffs {
                let i = self.index[v];
                let (pos, neg) = col_of_var[i];
                let q = BigRational::from(coeff.clone());
                row[pos] += &q;
                if let Some(neg) = neg {
                    row[neg] -= &q;
                }
            }
            rows.push((row, c.rel, BigRational::from(c.constant.clone())));
        }

        let mut objective = vec![BigRational::zero(); ncols];
        let mut offset = BigRational::zero();
        if let Some((coeffs, constant)) = self.objective {
            offset = BigRational::from(constant.clone());
            for (v, c) in coeffs {
                let i = self.index[v];
                let (pos, neg) = col_of_var[i];
                let q = BigRational::from(c.clone());
                objective[pos] += &q;
                if let Some(neg) = neg {
                    objective[neg] -= &q;
                }
            }
        }

        match simplex(rows, objective) {
            SimplexOutcome::Infeasible => LpOutcome::Infeasible,
            SimplexOutcome::Unbounded => LpOutcome::Unbounded,
            SimplexOutcome::Optimal(col_values, obj) => {
                let values = col_of_var
                    .iter()
                    .map(|(pos, neg)| match neg {
                        None => col_values[*pos].clone(),
                        Some(neg) => &col_values[*pos] - &col_values[*neg],
                    })
                    .collect();
                LpOutcome::Optimal(values, obj + offset)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Two-phase dense simplex with Bland's rule
// ---------------------------------------------------------------------------

enum SimplexOutcome {
    Infeasible,
    Unbounded,
    Optimal(Vec<BigRational>, BigRational),
}

/// Minimizes `objective . x` subject to the rows and `x >= 0`.
fn simplex(
    rows: Vec<(Vec<BigRational>, Relation, BigRational)>,
    objective: Vec<BigRational>,
) -> SimplexOutcome {
    let ncols = objective.len();
    let m = rows.len();

    // Equality standard form: slack column per Le row, then artificials.
    let num_slack = rows
        .iter()
        .filter(|(_, rel, _)| *rel == Relation::Le)
        .count();
    let total = ncols + num_slack + m; // worst case: one artificial per row
    let mut tab: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut next_slack = ncols;
    let mut next_artificial = ncols + num_slack;
    let mut artificials: BTreeSet<usize> = BTreeSet::new();

    for (mut row, rel, mut rhs) in rows {
        row.resize(total, BigRational::zero());
        let mut slack_col = None;
        if rel == Relation::Le {
            row[next_slack] = BigRational::one();
            slack_col = Some(next_slack);
            next_slack += 1;
        }
        if rhs.is_negative() {
            for c in row.iter_mut() {
                *c = -std::mem::take(c);
            }
            rhs = -rhs;
        }
        // A slack with +1 coefficient and nonnegative rhs can start basic;
        // otherwise the row needs an artificial variable.
        let basic = match slack_col {
            Some(s) if row[s].is_one() => s,
            _ => {
                row[next_artificial] = BigRational::one();
                artificials.insert(next_artificial);
                next_artificial += 1;
                next_artificial - 1
            }
        };
        basis.push(basic);
        row.push(rhs);
        tab.push(row);
    }
    let rhs_col = total;

    // Phase 1: minimize the sum of artificials.
    if !artificials.is_empty() {
        let mut phase1 = vec![BigRational::zero(); total + 1];
        for a in &artificials {
            phase1[*a] = BigRational::one();
        }
        // Reduce the objective row against the basic artificials.
        for (r, b) in basis.iter().enumerate() {
            if artificials.contains(b) && !phase1[*b].is_zero() {
                let factor = phase1[*b].clone();
                for j in 0..=total {
                    let delta = &factor * &tab[r][j];
                    phase1[j] -= delta;
                }
            }
        }
        if run_simplex(&mut tab, &mut basis, &mut phase1, total) == PivotResult::Unbounded {
            unreachable!("phase-1 objective is bounded below by zero");
        }
        if !phase1[rhs_col].is_zero() {
            return SimplexOutcome::Infeasible;
        }
        // Pivot remaining artificials out of the basis where possible.
        for r in 0..m {
            if artificials.contains(&basis[r]) {
                if let Some(j) = (0..ncols + num_slack).find(|j| !tab[r][*j].is_zero()) {
                    pivot(&mut tab, &mut basis, &mut phase1, r, j);
                }
            }
        }
    }

    // Phase 2: original objective, with artificial columns frozen.
    let mut obj = vec![BigRational::zero(); total + 1];
    obj[..ncols].clone_from_slice(&objective[..ncols]);
    for (r, b) in basis.iter().enumerate() {
        if !obj[*b].is_zero() {
            let factor = obj[*b].clone();
            for j in 0..=total {
                let delta = &factor * &tab[r][j];
                obj[j] -= delta;
            }
        }
    }
    // Degenerate rows may keep an artificial basic at value zero; never let
    // one re-enter.
    let structural_limit = ncols + num_slack;
    if run_simplex_limited(&mut tab, &mut basis, &mut obj, structural_limit, total)
        == PivotResult::Unbounded
    {
        return SimplexOutcome::Unbounded;
    }

    let mut values = vec![BigRational::zero(); ncols];
    for (r, b) in basis.iter().enumerate() {
        if *b < ncols {
            values[*b] = tab[r][rhs_col].clone();
        }
    }
    let obj_value = -obj[rhs_col].clone();
    SimplexOutcome::Optimal(values, obj_value)
}

#[derive(PartialEq, Eq)]
enum PivotResult {
    Optimal,
    Unbounded,
}

fn run_simplex(
    tab: &mut [Vec<BigRational>],
    basis: &mut [usize],
    obj: &mut [BigRational],
    total: usize,
) -> PivotResult {
    run_simplex_limited(tab, basis, obj, total, total)
}

fn run_simplex_limited(
    tab: &mut [Vec<BigRational>],
    basis: &mut [usize],
    obj: &mut [BigRational],
    entering_limit: usize,
    total: usize,
) -> PivotResult {
    let rhs_col = total;
    loop {
        // Bland: smallest-index column with negative reduced cost.
        let entering = match (0..entering_limit).find(|j| obj[*j].is_negative()) {
            Some(j) => j,
            None => return PivotResult::Optimal,
        };
        // Minimum ratio, ties broken by smallest basic variable index.
        let mut leaving: Option<(usize, BigRational)> = None;
        for r in 0..tab.len() {
            if tab[r][entering].is_positive() {
                let ratio = &tab[r][rhs_col] / &tab[r][entering];
                let replace = match &leaving {
                    None => true,
                    Some((best_r, best)) => {
                        ratio < *best || (ratio == *best && basis[r] < basis[*best_r])
                    }
                };
                if replace {
                    leaving = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leaving else {
            return PivotResult::Unbounded;
        };
        pivot(tab, basis, obj, row, entering);
    }
}

fn pivot(
    tab: &mut [Vec<BigRational>],
    basis: &mut [usize],
    obj: &mut [BigRational],
    row: usize,
    col: usize,
) {
    let pivot_value = tab[row][col].clone();
    for cell in tab[row].iter_mut() {
        *cell /= &pivot_value;
    }
    let pivot_row = tab[row].clone();
    for (r, current) in tab.iter_mut().enumerate() {
        if r != row && !current[col].is_zero() {
            let factor = current[col].clone();
            for (cell, p) in current.iter_mut().zip(&pivot_row) {
                *cell -= &factor * p;
            }
        }
    }
    if !obj[col].is_zero() {
        let factor = obj[col].clone();
        for (cell, p) in obj.iter_mut().zip(&pivot_row) {
            *cell -= &factor * p;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> LiaLimits {
        LiaLimits::default()
    }

    fn nonneg(vars: &[VarId]) -> BTreeSet<VarId> {
        vars.iter().copied().collect()
    }

    fn lc(coeffs: &[(VarId, i64)], rel: Relation, constant: i64) -> LinearConstraint {
        LinearConstraint::new(
            coeffs.iter().map(|(v, c)| (*v, BigInt::from(*c))).collect(),
            rel,
            BigInt::from(constant),
        )
    }

    const LEN: VarId = 0;
    const K: VarId = 1;
    const M: VarId = 2;

    #[test]
    fn multiple_of_three_at_least_five() {
        // len = 3k, k >= 0, len >= 5: minimal model is len = 6, k = 2.
        let cs = vec![
            lc(&[(LEN, 1), (K, -3)], Relation::Eq, 0),
            LinearConstraint::lower(LEN, 5),
        ];
        match minimize(LEN, &cs, &[], &nonneg(&[LEN, K]), &limits()) {
            LiaResult::Sat(asg) => {
                assert_eq!(asg.get(LEN), BigInt::from(6));
                assert_eq!(asg.get(K), BigInt::from(2));
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_bounds_are_unsat() {
        let cs = vec![
            LinearConstraint::lower(LEN, 7),
            LinearConstraint::upper(LEN, 5),
        ];
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[LEN]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn no_common_multiple_in_window() {
        // len = 3k, len = 2m, 1 <= len <= 5 has no solution.
        let cs = vec![
            lc(&[(LEN, 1), (K, -3)], Relation::Eq, 0),
            lc(&[(LEN, 1), (M, -2)], Relation::Eq, 0),
            LinearConstraint::lower(LEN, 1),
            LinearConstraint::upper(LEN, 5),
        ];
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[LEN, K, M]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn minimize_unconstrained_length_gives_zero() {
        match minimize(LEN, &[], &[], &nonneg(&[LEN]), &limits()) {
            LiaResult::Sat(asg) => assert_eq!(asg.get(LEN), BigInt::zero()),
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn minimize_unsat_system() {
        let cs = vec![
            LinearConstraint::lower(LEN, 7),
            LinearConstraint::upper(LEN, 5),
        ];
        assert_eq!(
            minimize(LEN, &cs, &[], &nonneg(&[LEN]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn blocking_clause_excludes_assignment() {
        // len = 3k, len >= 5, blocked {len = 6}: next minimal is 9.
        let cs = vec![
            lc(&[(LEN, 1), (K, -3)], Relation::Eq, 0),
            LinearConstraint::lower(LEN, 5),
        ];
        let blocks = vec![BlockingClause::new(BTreeMap::from([(
            LEN,
            BigInt::from(6),
        )]))];
        match minimize(LEN, &cs, &blocks, &nonneg(&[LEN, K]), &limits()) {
            LiaResult::Sat(asg) => {
                assert_eq!(asg.get(LEN), BigInt::from(9));
                assert!(!blocks[0].violated_by(&asg));
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn multi_variable_block_needs_one_disagreement() {
        // x, y in [0, 1]; block {x = 0, y = 0}: solutions remain.
        let cs = vec![
            LinearConstraint::upper(LEN, 1),
            LinearConstraint::upper(K, 1),
        ];
        let blocks = vec![BlockingClause::new(BTreeMap::from([
            (LEN, BigInt::zero()),
            (K, BigInt::zero()),
        ]))];
        match check_sat(&cs, &blocks, &nonneg(&[LEN, K]), &limits()) {
            LiaResult::Sat(asg) => {
                assert!(!blocks[0].violated_by(&asg));
                assert!(cs.iter().all(|c| c.eval(&asg)));
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn negative_solutions_for_free_variables() {
        let cs = vec![LinearConstraint::upper(LEN, -3)];
        match check_sat(&cs, &[], &BTreeSet::new(), &limits()) {
            LiaResult::Sat(asg) => assert!(asg.get(LEN) <= BigInt::from(-3)),
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn node_budget_yields_unknown() {
        // 2x + 3k = 1 over nonnegative integers needs branching to refute;
        // one node is not enough.
        let cs = vec![lc(&[(LEN, 2), (K, 3)], Relation::Eq, 1)];
        let tight = LiaLimits {
            max_nodes: 1,
            deadline: None,
        };
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[LEN, K]), &tight),
            LiaResult::Unknown
        );
    }

    #[test]
    fn parity_conflict_is_unsat() {
        // 2x - 2k = 1 has no integer solution even though the LP is
        // feasible; the gcd presolve refutes it without branching.
        let cs = vec![lc(&[(LEN, 2), (K, -2)], Relation::Eq, 1)];
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[LEN, K]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn parity_conflict_through_elimination() {
        // x = 2k, y = 2m, x = y + 1: substitution exposes 2k - 2m = 1.
        let (x, y, k, m) = (0, 1, 2, 3);
        let cs = vec![
            lc(&[(x, 1), (k, -2)], Relation::Eq, 0),
            lc(&[(y, 1), (m, -2)], Relation::Eq, 0),
            lc(&[(x, 1), (y, -1)], Relation::Eq, 1),
        ];
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[x, y, k, m]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn parity_window_through_inequalities_is_unsat() {
        // 0 < 2x - 2y < 2 written as two inequalities; gcd rounding turns
        // the window into an immediate conflict.
        let (x, y) = (0, 1);
        let cs = vec![
            lc(&[(x, -2), (y, 2)], Relation::Le, -1),
            lc(&[(x, 2), (y, -2)], Relation::Le, 1),
        ];
        assert_eq!(
            check_sat(&cs, &[], &nonneg(&[x, y]), &limits()),
            LiaResult::Unsat
        );
    }

    #[test]
    fn elimination_keeps_nonnegativity() {
        // x = k - 5 with x >= 0 forces k >= 5 even after x is eliminated.
        let (x, k) = (0, 1);
        let cs = vec![lc(&[(x, 1), (k, -1)], Relation::Eq, -5)];
        match minimize(k, &cs, &[], &nonneg(&[x, k]), &limits()) {
            LiaResult::Sat(asg) => {
                assert_eq!(asg.get(k), BigInt::from(5));
                assert_eq!(asg.get(x), BigInt::zero());
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn minimize_is_tight() {
        // minimize returns v such that adding objective <= v - 1 is unsat.
        let cs = vec![
            lc(&[(LEN, 1), (K, -3)], Relation::Eq, 0),
            LinearConstraint::lower(LEN, 5),
        ];
        let nn = nonneg(&[LEN, K]);
        let LiaResult::Sat(asg) = minimize(LEN, &cs, &[], &nn, &limits()) else {
            panic!("expected sat");
        };
        let v = asg.get(LEN);
        let mut tightened = cs.clone();
        tightened.push(LinearConstraint::upper(LEN, v - 1));
        assert_eq!(check_sat(&tightened, &[], &nn, &limits()), LiaResult::Unsat);
    }

    #[test]
    fn sat_assignments_satisfy_all_constraints() {
        let cs = vec![
            lc(&[(LEN, 2), (K, 3)], Relation::Le, 12),
            lc(&[(LEN, -1), (K, 1)], Relation::Le, 1),
            lc(&[(LEN, 1), (K, 1)], Relation::Eq, 4),
        ];
        match check_sat(&cs, &[], &nonneg(&[LEN, K]), &limits()) {
            LiaResult::Sat(asg) => {
                for c in &cs {
                    assert!(c.eval(&asg), "violated {c:?} by {asg:?}");
                }
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }
}
