//! Polynomial field expressions: parsing, exact expansion, jets and evaluation.

mod ast;
mod jet;
mod parser;
mod poly;

pub use ast::{ExprKind, FieldExpr, Span, Var};
pub use jet::{jet, jet_at, JetCoeff, jet_slot, jet_to_poly, param_jet, truncate3, Jet3, ParamJet3, JET_INDICES};
pub use parser::{parse_field, ParseError, MAX_EXPONENT};
pub use poly::{pow_rat, rat, rat_to_f64, CompiledPoly, Monomial, Poly};

use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("symbol `{0}` is not bound")]
    UnboundSymbol(&'static str),
}

/// Jet at the origin: exact when `mu` is bound (or absent), parameter-valued otherwise.
pub enum ExtractedJet {
    Exact(Jet3<BigRational>),
    Param(ParamJet3),
}

pub fn jet_extract(f: &FieldExpr, mu: Option<&BigRational>) -> ExtractedJet {
    let p = Poly::from_expr(f);
    match mu {
        Some(m) => ExtractedJet::Exact(jet_at(&p, m)),
        None if !p.uses(Var::Mu) && !p.uses(Var::Eps) => ExtractedJet::Exact(jet(&p)),
        None => ExtractedJet::Param(param_jet(&p)),
    }
}

/// Evaluates with the given bindings; every symbol the expression uses must be bound.
pub fn evaluate_field(
    f: &FieldExpr,
    point: [Option<f64>; 3],
    mu: Option<f64>,
    eps: Option<f64>,
) -> Result<f64, EvalError> {
    let vals = [point[0], point[1], point[2], mu, eps];
    let mut bound = [0.0; 5];
    for v in Var::ALL {
        match vals[v.index()] {
            Some(x) => bound[v.index()] = x,
            None if f.uses(v) => return Err(EvalError::UnboundSymbol(v.name())),
            None => {}
        }
    }
    Ok(eval_tree(f, &bound))
}

fn eval_tree(f: &FieldExpr, b: &[f64; 5]) -> f64 {
    match &f.kind {
        ExprKind::Num(v) => rat_to_f64(v),
        ExprKind::Var(v) => b[v.index()],
        ExprKind::Neg(a) => -eval_tree(a, b),
        ExprKind::Add(x, y) => eval_tree(x, b) + eval_tree(y, b),
        ExprKind::Sub(x, y) => eval_tree(x, b) - eval_tree(y, b),
        ExprKind::Mul(x, y) => eval_tree(x, b) * eval_tree(y, b),
        ExprKind::Pow(x, n) => eval_tree(x, b).powi(*n as i32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let f = parse_field("x*y").unwrap();
        assert_eq!(evaluate_field(&f, [Some(2.0), Some(3.0), Some(0.0)], None, None), Ok(6.0));
        let r = parse_field("-x^2 + x*y + z^2").unwrap();
        assert_eq!(
            evaluate_field(&r, [Some(1.0); 3], Some(0.0), Some(0.0)),
            Ok(1.0)
        );
        let e = parse_field("eps^2").unwrap();
        let v = evaluate_field(&e, [None; 3], None, Some(0.05)).unwrap();
        assert!((v - 0.0025).abs() < 1e-16);
    }

    #[test]
    fn unbound_symbol() {
        let f = parse_field("x + mu").unwrap();
        assert_eq!(
            evaluate_field(&f, [Some(1.0), None, None], None, None),
            Err(EvalError::UnboundSymbol("mu"))
        );
    }

    #[test]
    fn extraction_modes() {
        let f = parse_field("mu*z^2 + x*y").unwrap();
        assert!(matches!(jet_extract(&f, None), ExtractedJet::Param(_)));
        match jet_extract(&f, Some(&rat(1, 2))) {
            ExtractedJet::Exact(j) => assert_eq!(*j.get(0, 0, 2), rat(1, 1)),
            ExtractedJet::Param(_) => panic!("mu was bound"),
        }
    }
}
