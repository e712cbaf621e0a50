//! Expressions, programs and the five primitive constructors.
//!
//! A [`Program`] is an arena of nodes over a fixed vocabulary. Every node is
//! a seq-to-embedding function built from earlier nodes, so the arena order
//! is a topological order and cycles cannot be written. Dimensions are
//! checked when a node is created.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num::rational::Ratio;
use num::{One, Zero};
use pencil_core::Token;

use crate::FaspError;

/// Exact scalar used by every value and matrix entry. Evaluation uses
/// checked arithmetic and reports an overflow instead of rounding.
pub type Rational = Ratio<i128>;

/// The rational equal to `n`.
pub fn rat(n: i64) -> Rational {
    Ratio::from_integer(n as i128)
}

/// Declared value domain of a node. Debug sessions check it at every
/// position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ty {
    /// Any rational vector.
    Real,
    /// Integer entries.
    Int,
    /// Entries in {0, 1}.
    Bool,
    /// Exactly one entry is 1 and the others are 0.
    OneHot,
}

impl Ty {
    /// True when `v` lies in the domain.
    pub fn admits(self, v: &[Rational]) -> bool {
        match self {
            Ty::Real => true,
            Ty::Int => v.iter().all(|x| x.is_integer()),
            Ty::Bool => v.iter().all(|x| x.is_zero() || x.is_one()),
            Ty::OneHot => v.iter().all(|x| x.is_zero() || x.is_one()) && v.iter().filter(|x| x.is_one()).count() == 1,
        }
    }

    /// Whether every value of `self` is also a value of `other`.
    pub fn within(self, other: Ty) -> bool {
        matches!(
            (self, other),
            (_, Ty::Real)
                | (Ty::Int | Ty::Bool | Ty::OneHot, Ty::Int)
                | (Ty::Bool | Ty::OneHot, Ty::Bool)
                | (Ty::OneHot, Ty::OneHot)
        )
    }

    /// The narrowest of Real, Int and Bool that holds both types.
    pub fn join(self, other: Ty) -> Ty {
        if self.within(Ty::Bool) && other.within(Ty::Bool) {
            Ty::Bool
        } else if self.within(Ty::Int) && other.within(Ty::Int) {
            Ty::Int
        } else {
            Ty::Real
        }
    }

    fn name(self) -> &'static str {
        match self {
            Ty::Real => "real",
            Ty::Int => "int",
            Ty::Bool => "bool",
            Ty::OneHot => "onehot",
        }
    }
}

/// Coordinate-wise nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    /// `max(x, 0)`.
    Relu,
    /// `x * y` for two inputs of equal dimension.
    Multiply,
    /// `x * x`.
    Square,
    /// `x * max(y, 0)` for two inputs of equal dimension.
    Reglu,
}

impl Activation {
    /// Number of inputs.
    pub fn arity(self) -> usize {
        match self {
            Activation::Relu | Activation::Square => 1,
            Activation::Multiply | Activation::Reglu => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Multiply => "multiply",
            Activation::Square => "square",
            Activation::Reglu => "reglu",
        }
    }
}

/// A primitive node.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// A table from vocabulary index to vector, applied to the last token.
    TokenEmbedding(Vec<Vec<Rational>>),
    /// The prefix length `n`.
    SeqLen,
    /// Children stacked in order.
    Concat(Vec<usize>),
    /// Average-hard attention over all prefixes.
    Aha {
        /// Query, read at the current prefix.
        q: usize,
        /// Key, read at every prefix.
        k: usize,
        /// Value, read at every prefix.
        v: usize,
    },
    /// A matrix applied to the child's value. Rows are outputs.
    Linear {
        /// Output-by-input matrix.
        matrix: Vec<Vec<Rational>>,
        /// The child.
        input: usize,
    },
    /// A coordinate-wise nonlinearity.
    Activation {
        /// Which one.
        act: Activation,
        /// Its inputs.
        inputs: Vec<usize>,
    },
}

/// A node of the arena.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// The primitive.
    pub op: Op,
    /// Output dimension.
    pub dim: usize,
    /// Declared domain.
    pub ty: Ty,
    /// The library operator that created the node, or the primitive name.
    pub origin: &'static str,
}

/// A handle to a node with its dimension and declared domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Expr {
    pub(crate) id: usize,
    pub(crate) dim: usize,
    pub(crate) ty: Ty,
}

impl Expr {
    /// Arena index.
    pub fn id(self) -> usize {
        self.id
    }

    /// Output dimension.
    pub fn dim(self) -> usize {
        self.dim
    }

    /// Declared domain.
    pub fn ty(self) -> Ty {
        self.ty
    }
}

/// Named definitions over a vocabulary, with a designated result whose
/// unique largest coordinate names the next token.
#[derive(Debug, Clone)]
pub struct Program {
    vocab: Vec<Token>,
    index: HashMap<Token, usize>,
    nodes: Vec<Node>,
    defs: Vec<(String, Expr)>,
    result: Option<Expr>,
    pub(crate) cache: HashMap<&'static str, Expr>,
}

impl Program {
    /// An empty program over `vocab`. Fails on an empty or repeating
    /// vocabulary.
    pub fn new(vocab: Vec<Token>) -> Result<Self, FaspError> {
        if vocab.is_empty() {
            return Err(FaspError::BadVocabulary("empty".into()));
        }
        let mut index = HashMap::new();
        for (i, t) in vocab.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(FaspError::BadVocabulary(format!("{} appears twice", t.surface())));
            }
        }
        Ok(Program { vocab, index, nodes: Vec::new(), defs: Vec::new(), result: None, cache: HashMap::new() })
    }

    /// The vocabulary in index order.
    pub fn vocab(&self) -> &[Token] {
        &self.vocab
    }

    /// Index of `token` in the vocabulary.
    pub fn token_index(&self, token: &Token) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// All nodes in creation order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Named definitions in order.
    pub fn definitions(&self) -> &[(String, Expr)] {
        &self.defs
    }

    /// The definition called `name`.
    pub fn get(&self, name: &str) -> Option<Expr> {
        self.defs.iter().find(|(n, _)| n == name).map(|&(_, e)| e)
    }

    /// The designated result.
    pub fn result(&self) -> Option<Expr> {
        self.result
    }

    pub(crate) fn push(&mut self, op: Op, dim: usize, ty: Ty, origin: &'static str) -> Expr {
        self.nodes.push(Node { op, dim, ty, origin });
        Expr { id: self.nodes.len() - 1, dim, ty }
    }

    /// Re-declares the domain and origin of a node the caller just built.
    pub(crate) fn tag(&mut self, e: Expr, ty: Ty, origin: &'static str) -> Expr {
        let node = &mut self.nodes[e.id];
        node.ty = ty;
        node.origin = origin;
        Expr { ty, ..e }
    }

    fn check(&self, e: Expr) -> Result<(), FaspError> {
        match self.nodes.get(e.id) {
            Some(n) if n.dim == e.dim => Ok(()),
            _ => Err(FaspError::ForeignExpr(e.id)),
        }
    }

    /// A token embedding: row `i` of `table` is the value whenever the
    /// last token is vocabulary entry `i`.
    pub fn token_embedding(&mut self, table: Vec<Vec<Rational>>, ty: Ty) -> Result<Expr, FaspError> {
        if table.len() != self.vocab.len() {
            return Err(FaspError::Dim { op: "token_embedding", expected: self.vocab.len(), got: table.len() });
        }
        let dim = table[0].len();
        if dim == 0 {
            return Err(FaspError::Dim { op: "token_embedding", expected: 1, got: 0 });
        }
        if let Some(row) = table.iter().find(|r| r.len() != dim) {
            return Err(FaspError::Dim { op: "token_embedding", expected: dim, got: row.len() });
        }
        Ok(self.push(Op::TokenEmbedding(table), dim, ty, "token_embedding"))
    }

    /// The positional feature: the prefix length.
    pub fn seq_len(&mut self) -> Expr {
        if let Some(&e) = self.cache.get("seq_len") {
            return e;
        }
        let e = self.push(Op::SeqLen, 1, Ty::Int, "seq_len");
        self.cache.insert("seq_len", e);
        e
    }

    /// Stacks `parts` into one vector.
    pub fn concat(&mut self, parts: &[Expr]) -> Result<Expr, FaspError> {
        if parts.is_empty() {
            return Err(FaspError::Dim { op: "concat", expected: 1, got: 0 });
        }
        for &p in parts {
            self.check(p)?;
        }
        let dim = parts.iter().map(|p| p.dim).sum();
        let ty = parts.iter().skip(1).fold(parts[0].ty, |t, p| t.join(p.ty));
        Ok(self.push(Op::Concat(parts.iter().map(|p| p.id).collect()), dim, ty, "concat"))
    }

    /// Average-hard attention: the mean of `v` over the prefixes whose key
    /// has the largest inner product with the current query.
    pub fn aha(&mut self, q: Expr, k: Expr, v: Expr) -> Result<Expr, FaspError> {
        for e in [q, k, v] {
            self.check(e)?;
        }
        if q.dim != k.dim {
            return Err(FaspError::Dim { op: "aha", expected: q.dim, got: k.dim });
        }
        Ok(self.push(Op::Aha { q: q.id, k: k.id, v: v.id }, v.dim, Ty::Real, "aha"))
    }

    /// `matrix` times the value of `input`.
    pub fn linear(&mut self, input: Expr, matrix: Vec<Vec<Rational>>) -> Result<Expr, FaspError> {
        self.check(input)?;
        if matrix.is_empty() {
            return Err(FaspError::Dim { op: "linear", expected: 1, got: 0 });
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != input.dim) {
            return Err(FaspError::Dim { op: "linear", expected: input.dim, got: row.len() });
        }
        let dim = matrix.len();
        Ok(self.push(Op::Linear { matrix, input: input.id }, dim, Ty::Real, "linear"))
    }

    /// A coordinate-wise nonlinearity of `inputs`, which share a dimension.
    pub fn activation(&mut self, act: Activation, inputs: &[Expr]) -> Result<Expr, FaspError> {
        if inputs.len() != act.arity() {
            return Err(FaspError::Arity { op: act.name(), expected: act.arity(), got: inputs.len() });
        }
        for &e in inputs {
            self.check(e)?;
            if e.dim != inputs[0].dim {
                return Err(FaspError::Dim { op: act.name(), expected: inputs[0].dim, got: e.dim });
            }
        }
        let ty = match act {
            Activation::Relu | Activation::Square => inputs[0].ty.join(inputs[0].ty),
            Activation::Multiply | Activation::Reglu => inputs[0].ty.join(inputs[1].ty),
        };
        Ok(self.push(
            Op::Activation { act, inputs: inputs.iter().map(|e| e.id).collect() },
            inputs[0].dim,
            ty,
            act.name(),
        ))
    }

    /// Records `e` under `name`. Names are unique.
    pub fn define(&mut self, name: &str, e: Expr) -> Result<Expr, FaspError> {
        self.check(e)?;
        if self.get(name).is_some() {
            return Err(FaspError::DuplicateName(name.to_string()));
        }
        self.defs.push((name.to_string(), e));
        Ok(e)
    }

    /// Designates the result, which must have one coordinate per token.
    pub fn set_result(&mut self, e: Expr) -> Result<(), FaspError> {
        self.check(e)?;
        if e.dim != self.vocab.len() {
            return Err(FaspError::Dim { op: "result", expected: self.vocab.len(), got: e.dim });
        }
        self.result = Some(e);
        Ok(())
    }

    /// A readable listing: every node, then the named definitions.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let words: Vec<&str> = self.vocab.iter().map(|t| t.surface()).collect();
        let _ = writeln!(out, "# vocabulary ({}): {}", words.len(), words.join(" "));
        let _ = writeln!(out, "# nodes");
        let names: HashMap<usize, &str> = self.defs.iter().map(|(n, e)| (e.id, n.as_str())).collect();
        for (i, node) in self.nodes.iter().enumerate() {
            let body = match &node.op {
                Op::TokenEmbedding(table) => format!("token_embedding[{}x{}]", table.len(), node.dim),
                Op::SeqLen => "seq_len".to_string(),
                Op::Concat(ids) => format!("concat({})", refs(ids)),
                Op::Aha { q, k, v } => format!("aha(n{q}, n{k}, n{v})"),
                Op::Linear { matrix, input } => {
                    let rows: Vec<String> =
                        matrix.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).collect();
                    format!("linear(n{input}) [{}]", rows.join("; "))
                }
                Op::Activation { act, inputs } => format!("{}({})", act.name(), refs(inputs)),
            };
            let _ = write!(out, "n{i} = {body} : {}^{}", node.ty.name(), node.dim);
            if node.origin != op_name(&node.op) {
                let _ = write!(out, "  <{}>", node.origin);
            }
            if let Some(name) = names.get(&i) {
                let _ = write!(out, "  # {name}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# definitions");
        for (name, e) in &self.defs {
            let _ = writeln!(out, "{name} = n{} : {}^{}", e.id, e.ty.name(), e.dim);
        }
        if let Some(r) = self.result {
            let _ = writeln!(out, "result = n{}", r.id);
        }
        out
    }
}

fn refs(ids: &[usize]) -> String {
    ids.iter().map(|i| format!("n{i}")).collect::<Vec<_>>().join(", ")
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::TokenEmbedding(_) => "token_embedding",
        Op::SeqLen => "seq_len",
        Op::Concat(_) => "concat",
        Op::Aha { .. } => "aha",
        Op::Linear { .. } => "linear",
        Op::Activation { act, .. } => act.name(),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}
