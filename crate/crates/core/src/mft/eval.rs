//! In-memory denotational evaluation; the reference semantics that the
//! streaming engine and every rewrite are checked against.

use std::cell::OnceCell;
use std::rc::Rc;

use super::{size, Guard, Mft, OutLabel, Rhs, RhsItem, StateId, StateRules, Symbol, Var};
use crate::error::{Error, Result};
use crate::forest::{Forest, Label, NodeKind, Tree};

/// Evaluate `m` on `input` with the default stay-step budget.
pub fn evaluate(m: &Mft, input: &Forest) -> Result<Forest> {
    Evaluator::new(m).run(input)
}

pub fn evaluate_with_budget(m: &Mft, input: &Forest, budget: usize) -> Result<Forest> {
    Evaluator::new(m).with_budget(budget).run(input)
}

pub struct Evaluator<'m> {
    mft: &'m Mft,
    index: Vec<StateRules>,
    budget: usize,
}

struct Env<'m, 'a> {
    input: &'a [Tree],
    params: Vec<Rc<Thunk<'m, 'a>>>,
}

/// A call-by-need parameter value.
struct Thunk<'m, 'a> {
    rhs: &'m Rhs,
    env: Rc<Env<'m, 'a>>,
    stay: usize,
    value: OnceCell<Rc<Vec<Tree>>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(mft: &'m Mft) -> Self {
        Evaluator { mft, index: mft.index(), budget: 10 * size(mft).max(1) }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn run(&self, input: &Forest) -> Result<Forest> {
        let mut out = Vec::new();
        self.call(self.mft.initial, &input.0, Vec::new(), 0, &mut out)?;
        Ok(Forest(out))
    }

    /// Select the applicable rule of `state` for the forest `input`.
    pub(crate) fn select(index: &[StateRules], state: StateId, head: Option<&Label>) -> Option<usize> {
        let rules = &index[state.0];
        match head {
            None => rules.epsilon,
            Some(label) => rules
                .symbols
                .get(&Symbol::of_label(label))
                .copied()
                .or(if label.is_text() { rules.text } else { None })
                .or(rules.default),
        }
    }

    fn call<'a>(
        &self,
        state: StateId,
        input: &'a [Tree],
        params: Vec<Rc<Thunk<'m, 'a>>>,
        stay: usize,
        out: &mut Vec<Tree>,
    ) -> Result<()> {
        if stay > self.budget {
            return Err(Error::StayBudget {
                state: self.mft.state(state).name.clone(),
                budget: self.budget,
            });
        }
        let Some(rule) = Self::select(&self.index, state, input.first().map(|t| &t.label)) else {
            let guard = if input.is_empty() { Guard::Epsilon } else { Guard::Default };
            return Err(Error::Invalid(vec![format!(
                "state `{}` has no rule for {guard:?}",
                self.mft.state(state).name
            )]));
        };
        let env = Rc::new(Env { input, params });
        stacker::maybe_grow(64 * 1024, 8 * 1024 * 1024, || {
            self.eval_rhs(&self.mft.rules[rule].rhs, &env, stay, out)
        })
    }

    fn eval_rhs<'a>(
        &self,
        rhs: &'m Rhs,
        env: &Rc<Env<'m, 'a>>,
        stay: usize,
        out: &mut Vec<Tree>,
    ) -> Result<()> {
        for item in &rhs.0 {
            match item {
                RhsItem::Node { label, children } => {
                    let label = match label {
                        OutLabel::Fixed(l) => l.clone(),
                        OutLabel::Current => env
                            .input
                            .first()
                            .map(|t| t.label.clone())
                            .ok_or_else(|| Error::Invalid(vec!["%t used on empty input".into()]))?,
                    };
                    let mut kids = Vec::new();
                    // text nodes are leaves; their child expression is not evaluated
                    if label.kind != NodeKind::Text {
                        self.eval_rhs(children, env, stay, &mut kids)?;
                    }
                    out.push(Tree::new(label, Forest(kids)));
                }
                RhsItem::Param(j) => {
                    let value = self.force(&env.params[j - 1])?;
                    out.extend(value.iter().cloned());
                }
                RhsItem::Call { state, input, args } => {
                    let (slice, next_stay) = match input {
                        Var::X0 => (env.input, stay + 1),
                        Var::X1 => (
                            env.input.first().map(|t| &t.children.0[..]).unwrap_or(&[]),
                            0,
                        ),
                        Var::X2 => (env.input.get(1..).unwrap_or(&[]), 0),
                    };
                    let params = args
                        .iter()
                        .map(|a| match a.0.as_slice() {
                            [RhsItem::Param(j)] => env.params[j - 1].clone(),
                            _ => Rc::new(Thunk {
                                rhs: a,
                                env: env.clone(),
                                stay,
                                value: OnceCell::new(),
                            }),
                        })
                        .collect();
                    self.call(*state, slice, params, next_stay, out)?;
                }
            }
        }
        Ok(())
    }

    fn force<'a>(&self, t: &Rc<Thunk<'m, 'a>>) -> Result<Rc<Vec<Tree>>> {
        if let Some(v) = t.value.get() {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        self.eval_rhs(t.rhs, &t.env, t.stay, &mut out)?;
        let v = Rc::new(out);
        let _ = t.value.set(v.clone());
        Ok(v)
    }
}
