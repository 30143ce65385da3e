use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Symbols admitted by the field grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    Mu,
    Eps,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Y, Var::Z, Var::Mu, Var::Eps];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::Mu => "mu",
            Var::Eps => "eps",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Slot in a monomial exponent vector.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_space(self) -> bool {
        matches!(self, Var::X | Var::Y | Var::Z)
    }
}

/// Byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    /// Nonnegative rational literal; negation is always an explicit `Neg` node.
    Num(BigRational),
    Var(Var),
    Neg(Box<FieldExpr>),
    Add(Box<FieldExpr>, Box<FieldExpr>),
    Sub(Box<FieldExpr>, Box<FieldExpr>),
    Mul(Box<FieldExpr>, Box<FieldExpr>),
    Pow(Box<FieldExpr>, u32),
}

/// Parsed polynomial expression over `x, y, z, mu, eps`.
///
/// Equality ignores source spans, so a printed and re-parsed tree compares
/// equal to the original.
#[derive(Debug, Clone)]
pub struct FieldExpr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for FieldExpr {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Num(a), Num(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Add(a1, a2), Add(b1, b2))
            | (Sub(a1, a2), Sub(b1, b2))
            | (Mul(a1, a2), Mul(b1, b2)) => a1 == b1 && a2 == b2,
            (Pow(a, n), Pow(b, m)) => n == m && a == b,
            _ => false,
        }
    }
}

impl FieldExpr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        FieldExpr { kind, span }
    }

    /// Literal constructor; a negative value becomes `Neg(Num(|v|))`.
    pub fn num(value: BigRational) -> Self {
        if value.is_negative() {
            FieldExpr::neg(FieldExpr::new(ExprKind::Num(value.abs()), Span::default()))
        } else {
            FieldExpr::new(ExprKind::Num(value), Span::default())
        }
    }

    pub fn var(v: Var) -> Self {
        FieldExpr::new(ExprKind::Var(v), Span::default())
    }

    pub fn neg(e: FieldExpr) -> Self {
        let span = e.span;
        FieldExpr::new(ExprKind::Neg(Box::new(e)), span)
    }

    pub fn add(a: FieldExpr, b: FieldExpr) -> Self {
        let span = a.span.join(b.span);
        FieldExpr::new(ExprKind::Add(Box::new(a), Box::new(b)), span)
    }

    pub fn sub(a: FieldExpr, b: FieldExpr) -> Self {
        let span = a.span.join(b.span);
        FieldExpr::new(ExprKind::Sub(Box::new(a), Box::new(b)), span)
    }

    pub fn mul(a: FieldExpr, b: FieldExpr) -> Self {
        let span = a.span.join(b.span);
        FieldExpr::new(ExprKind::Mul(Box::new(a), Box::new(b)), span)
    }

    pub fn pow(a: FieldExpr, n: u32) -> Self {
        let span = a.span;
        FieldExpr::new(ExprKind::Pow(Box::new(a), n), span)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(&self.kind, ExprKind::Num(v) if v.is_zero())
    }

    /// Degree in the variables selected by `pick`; an upper bound, exact
    /// unless terms cancel.
    pub fn degree_in(&self, pick: &dyn Fn(Var) -> bool) -> u32 {
        use ExprKind::*;
        match &self.kind {
            Num(_) => 0,
            Var(v) => u32::from(pick(*v)),
            Neg(a) => a.degree_in(pick),
            Add(a, b) | Sub(a, b) => a.degree_in(pick).max(b.degree_in(pick)),
            Mul(a, b) => a.degree_in(pick) + b.degree_in(pick),
            Pow(a, n) => a.degree_in(pick) * n,
        }
    }

    pub fn space_degree(&self) -> u32 {
        self.degree_in(&|v| v.is_space())
    }

    pub fn param_degree(&self) -> u32 {
        self.degree_in(&|v| !v.is_space())
    }

    pub fn degree_of(&self, var: Var) -> u32 {
        self.degree_in(&|v| v == var)
    }

    pub fn uses(&self, var: Var) -> bool {
        use ExprKind::*;
        match &self.kind {
            Num(_) => false,
            Var(v) => *v == var,
            Neg(a) | Pow(a, _) => a.uses(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) => a.uses(var) || b.uses(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self.kind {
            ExprKind::Add(..) | ExprKind::Sub(..) => 1,
            ExprKind::Mul(..) => 2,
            ExprKind::Neg(..) => 3,
            ExprKind::Pow(..) => 4,
            ExprKind::Num(_) | ExprKind::Var(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match &self.kind {
            ExprKind::Num(v) => {
                if v.is_integer() {
                    write!(f, "{}", v.numer())?
                } else {
                    write!(f, "{}/{}", v.numer(), v.denom())?
                }
            }
            ExprKind::Var(v) => f.write_str(v.name())?,
            ExprKind::Neg(a) => {
                f.write_str("-")?;
                a.fmt_prec(f, 3)?;
            }
            ExprKind::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 2)?;
            }
            ExprKind::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_prec(f, 2)?;
            }
            ExprKind::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("*")?;
                b.fmt_prec(f, 3)?;
            }
            ExprKind::Pow(a, n) => {
                // `3/2^2` is legal (the literal binds first) but reads badly
                let base_needs_paren = match &a.kind {
                    ExprKind::Num(v) => !v.is_integer(),
                    _ => false,
                };
                if base_needs_paren {
                    f.write_str("(")?;
                    a.fmt_prec(f, 0)?;
                    f.write_str(")")?;
                } else {
                    a.fmt_prec(f, 5)?;
                }
                write!(f, "^{n}")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
