//! Mixed-integer models: a small generic model type, LP text export and
//! import, an exact assignment checker, and encoders for the relative
//! positioning (`rp`) and positional assignment (`pa`) formulations.
//!
//! Variable and constraint names use bracketed indices such as `x[3,0]`.
//! Job indices are job ids; batch, slot, machine and family indices are
//! 0-based.

pub mod lp;
pub mod pa;
pub mod rp;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

use crate::instance::max_batch_counts;
use crate::scalar::Scalar;
use crate::{Instance, Time};

pub use lp::{lp_variable_names, read_lp, rename_for_lp, sanitize_name, write_lp, LpError};
pub use pa::{encode_pa, schedule_to_pa_assignment};
pub use rp::{encode_rp, schedule_to_rp_assignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable<S> {
    pub name: String,
    pub kind: VarKind,
    pub lower: S,
    /// `None` is unbounded above.
    pub upper: Option<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// `Σ coef · var  sense  rhs`, terms indexing [`Model::variables`].
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub name: String,
    pub terms: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// A minimisation model.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<S> {
    pub variables: Vec<Variable<S>>,
    pub constraints: Vec<Constraint<S>>,
    pub objective: Vec<(usize, S)>,
    index: HashMap<String, usize>,
}

impl<S: Scalar> Default for Model<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Merges repeated variables and drops zero coefficients, keeping first
/// occurrence order.
fn normalize<S: Scalar>(terms: Vec<(usize, S)>) -> Vec<(usize, S)> {
    let mut out: Vec<(usize, S)> = Vec::with_capacity(terms.len());
    let mut at: HashMap<usize, usize> = HashMap::new();
    for (v, c) in terms {
        match at.get(&v) {
            Some(&i) => out[i].1 = out[i].1.clone() + c,
            None => {
                at.insert(v, out.len());
                out.push((v, c));
            }
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

impl<S: Scalar> Model<S> {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Declares a variable. Panics if the name is taken.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: S, upper: Option<S>) -> usize {
        let name = name.into();
        let id = self.variables.len();
        let prev = self.index.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable {name}");
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    pub fn binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Binary, S::zero(), Some(S::one()))
    }

    /// Non-negative continuous variable.
    pub fn continuous(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Continuous, S::zero(), None)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, S)>, sense: Sense, rhs: S) {
        let terms = normalize(terms);
        debug_assert!(terms.iter().all(|(v, _)| *v < self.variables.len()));
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, S)>) {
        self.objective = normalize(terms);
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Number of variables whose name starts with `prefix[`.
    pub fn count_vars(&self, prefix: &str) -> usize {
        let p = format!("{prefix}[");
        self.variables.iter().filter(|v| v.name.starts_with(&p)).count()
    }

    /// Number of constraints whose name starts with `prefix[`.
    pub fn count_rows(&self, prefix: &str) -> usize {
        let p = format!("{prefix}[");
        self.constraints.iter().filter(|c| c.name.starts_with(&p)).count()
    }
}

/// Variable values by name.
pub type Assignment<S> = BTreeMap<String, S>;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport<S> {
    pub feasible: bool,
    pub objective: S,
    /// Violated constraint names, then `bound:` and `binary:` entries for
    /// variables outside their bounds or not integral.
    pub violated: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("assignment has no value for variable {0}")]
    MissingVariable(String),
}

/// Evaluates every row and the objective exactly in `S`.
pub fn check_assignment<S: Scalar>(model: &Model<S>, assignment: &Assignment<S>) -> Result<CheckReport<S>, CheckError> {
    let values: Vec<&S> = model
        .variables
        .iter()
        .map(|v| {
            assignment
                .get(&v.name)
                .ok_or_else(|| CheckError::MissingVariable(v.name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let eval = |terms: &[(usize, S)]| {
        terms
            .iter()
            .fold(S::zero(), |acc, (v, c)| acc + c.clone() * values[*v].clone())
    };

    let mut violated = Vec::new();
    for c in &model.constraints {
        let lhs = eval(&c.terms);
        let ok = match c.sense {
            Sense::Le => lhs <= c.rhs,
            Sense::Ge => lhs >= c.rhs,
            Sense::Eq => lhs == c.rhs,
        };
        if !ok {
            violated.push(c.name.clone());
        }
    }
    for (v, value) in model.variables.iter().zip(&values) {
        let value = *value;
        if *value < v.lower || v.upper.as_ref().is_some_and(|u| value > u) {
            violated.push(format!("bound:{}", v.name));
        }
        if v.kind == VarKind::Binary && !(value.is_zero() || value.is_one()) {
            violated.push(format!("binary:{}", v.name));
        }
    }
    Ok(CheckReport {
        feasible: violated.is_empty(),
        objective: eval(&model.objective),
        violated,
    })
}

/// `K = max r + max τ0 + Σ p + N · max τ`, with `N` the sizing batch count.
/// No completion of an earliest-start schedule exceeds `K - max τ`.
pub fn default_big_k(inst: &Instance) -> Time {
    let n = max_batch_counts(inst, true).total as Time;
    inst.max_release() + inst.setups.max_initial() + inst.total_processing() + n * inst.setups.max_inter()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("schedule uses {used} batches of family {family}, the model has {available}")]
    CapacityExceeded {
        family: usize,
        used: usize,
        available: usize,
    },
    #[error("schedule uses {used} batches on machine {machine}, the model has {available} slots")]
    SlotsExceeded {
        machine: usize,
        used: usize,
        available: usize,
    },
    #[error("schedule has {got} machines, instance has {available}")]
    MachineCount { got: usize, available: usize },
    #[error("schedule references unknown job {0}")]
    UnknownJob(u32),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;
    use crate::Rational;

    #[test]
    fn big_k_examples() {
        assert_eq!(default_big_k(&table1()), 29);
        let inst = table1();
        let mut jobs = inst.jobs.clone();
        for j in &mut jobs {
            j.processing *= 2;
        }
        let doubled = Instance::new(jobs, 1, 2, inst.setups.clone(), inst.bounds.clone());
        assert_eq!(default_big_k(&doubled), 29 + 10);
    }

    #[test]
    fn checker_reports_rows_and_bounds() {
        let mut m: Model<Rational> = Model::new();
        let x = m.binary("x[0]");
        let y = m.continuous("y");
        m.add_constraint("c[0]", vec![(x, Rational::from_int(2)), (y, Rational::from_int(1))], Sense::Ge, Rational::from_int(3));
        m.add_constraint("c[1]", vec![(y, Rational::from_int(1))], Sense::Le, Rational::from_int(1));
        m.set_objective(vec![(y, Rational::new(1, 2))]);
        let mut a = Assignment::new();
        a.insert("x[0]".into(), Rational::from_int(1));
        a.insert("y".into(), Rational::from_int(1));
        let r = check_assignment(&m, &a).unwrap();
        assert!(r.feasible);
        assert_eq!(r.objective, Rational::new(1, 2));

        a.insert("x[0]".into(), Rational::new(1, 2));
        let r = check_assignment(&m, &a).unwrap();
        assert_eq!(r.violated, vec!["c[0]".to_string(), "binary:x[0]".to_string()]);

        a.remove("y");
        assert_eq!(check_assignment(&m, &a), Err(CheckError::MissingVariable("y".into())));
    }

    #[test]
    fn repeated_terms_are_merged() {
        let mut m: Model<f64> = Model::new();
        let x = m.continuous("x");
        let y = m.continuous("y");
        m.add_constraint("c", vec![(x, 1.0), (y, 2.0), (x, -1.0), (y, 1.0)], Sense::Eq, 0.0);
        assert_eq!(m.constraints[0].terms, vec![(y, 3.0)]);
    }
}
