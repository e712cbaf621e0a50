//! The custom-operator library.
//!
//! Every operator elaborates to the primitives of [`Program`]. Affine maps
//! read the constant 1 from a token embedding, so linear nodes carry no
//! bias. Comparisons expect integer arguments and logic expects values in
//! {0, 1}. Those domains are declared on the nodes and checked by debug
//! sessions, not enforced at construction.

use crate::expr::{rat, Activation, Expr, Program, Rational, Ty};
use crate::FaspError;

type R = Result<Expr, FaspError>;

fn identity(d: usize) -> Vec<Vec<Rational>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { rat(1) } else { rat(0) }).collect()).collect()
}

fn require_scalar(op: &'static str, e: Expr) -> Result<(), FaspError> {
    if e.dim() == 1 {
        Ok(())
    } else {
        Err(FaspError::Dim { op, expected: 1, got: e.dim() })
    }
}

fn require_same(op: &'static str, a: Expr, b: Expr) -> Result<(), FaspError> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(FaspError::Dim { op, expected: a.dim(), got: b.dim() })
    }
}

fn infer_ty(values: &[Rational]) -> Ty {
    if Ty::OneHot.admits(values) {
        Ty::OneHot
    } else if Ty::Bool.admits(values) {
        Ty::Bool
    } else if Ty::Int.admits(values) {
        Ty::Int
    } else {
        Ty::Real
    }
}

impl Program {
    /// The same vector after every token.
    pub fn constant(&mut self, values: Vec<Rational>) -> R {
        let ty = infer_ty(&values);
        let table = vec![values; self.vocab().len()];
        let e = self.token_embedding(table, ty)?;
        Ok(self.tag(e, ty, "constant"))
    }

    /// The constant 1, shared by every affine map.
    pub fn one(&mut self) -> Expr {
        if let Some(&e) = self.cache.get("one") {
            return e;
        }
        let e = self.constant(vec![rat(1)]).expect("a constant row fits any vocabulary");
        self.cache.insert("one", e);
        e
    }

    /// The constant one-hot vector of length `len` with a 1 at `index`.
    pub fn onehot(&mut self, len: usize, index: usize) -> R {
        if index >= len {
            return Err(FaspError::Dim { op: "onehot", expected: len, got: index + 1 });
        }
        self.constant((0..len).map(|i| if i == index { rat(1) } else { rat(0) }).collect())
    }

    /// `matrix * x + bias`, read through the constant 1.
    pub fn affine(&mut self, x: Expr, matrix: Vec<Vec<Rational>>, bias: Vec<Rational>) -> R {
        if matrix.len() != bias.len() {
            return Err(FaspError::Dim { op: "affine", expected: matrix.len(), got: bias.len() });
        }
        let one = self.one();
        let stacked = self.concat(&[one, x])?;
        let rows = matrix
            .into_iter()
            .zip(bias)
            .map(|(row, b)| {
                let mut r = Vec::with_capacity(row.len() + 1);
                r.push(b);
                r.extend(row);
                r
            })
            .collect();
        self.linear(stacked, rows)
    }

    /// `c * x`.
    pub fn scale(&mut self, x: Expr, c: i64) -> R {
        let m = identity(x.dim()).into_iter().map(|r| r.into_iter().map(|v| v * rat(c)).collect()).collect();
        let e = self.linear(x, m)?;
        let ty = if c == 0 || c == 1 { x.ty().join(x.ty()) } else { x.ty().join(Ty::Int) };
        Ok(self.tag(e, ty, "scale"))
    }

    /// `x + c` in every coordinate.
    pub fn add_const(&mut self, x: Expr, c: i64) -> R {
        let e = self.affine(x, identity(x.dim()), vec![rat(c); x.dim()])?;
        Ok(self.tag(e, x.ty().join(Ty::Int), "add_const"))
    }

    /// Coordinate `i` of `x`.
    pub fn select(&mut self, x: Expr, i: usize) -> R {
        if i >= x.dim() {
            return Err(FaspError::Dim { op: "select", expected: x.dim(), got: i + 1 });
        }
        let row = (0..x.dim()).map(|j| if j == i { rat(1) } else { rat(0) }).collect();
        let e = self.linear(x, vec![row])?;
        Ok(self.tag(e, x.ty().join(x.ty()), "select"))
    }

    /// The sum of the coordinates of `x`.
    pub fn coord_sum(&mut self, x: Expr) -> R {
        let e = self.linear(x, vec![vec![rat(1); x.dim()]])?;
        Ok(self.tag(e, x.ty().join(Ty::Int), "coord_sum"))
    }

    /// A scalar repeated `d` times.
    pub fn broadcast(&mut self, x: Expr, d: usize) -> R {
        require_scalar("broadcast", x)?;
        let e = self.linear(x, vec![vec![rat(1)]; d])?;
        Ok(self.tag(e, x.ty().join(x.ty()), "broadcast"))
    }

    /// `[x]_+`.
    pub fn relu(&mut self, x: Expr) -> R {
        self.activation(Activation::Relu, &[x])
    }

    /// Coordinate-wise product.
    pub fn multiply(&mut self, a: Expr, b: Expr) -> R {
        self.activation(Activation::Multiply, &[a, b])
    }

    /// Coordinate-wise square.
    pub fn square(&mut self, x: Expr) -> R {
        self.activation(Activation::Square, &[x])
    }

    /// `a + b`.
    pub fn add(&mut self, a: Expr, b: Expr) -> R {
        require_same("add", a, b)?;
        let d = a.dim();
        let both = self.concat(&[a, b])?;
        let m = (0..d).map(|i| (0..2 * d).map(|j| if j % d == i { rat(1) } else { rat(0) }).collect()).collect();
        let e = self.linear(both, m)?;
        Ok(self.tag(e, a.ty().join(b.ty()).join(Ty::Int), "add"))
    }

    /// `a - b`.
    pub fn minus(&mut self, a: Expr, b: Expr) -> R {
        require_same("minus", a, b)?;
        let d = a.dim();
        let both = self.concat(&[a, b])?;
        let m = (0..d)
            .map(|i| {
                (0..2 * d)
                    .map(|j| match (j % d == i, j < d) {
                        (true, true) => rat(1),
                        (true, false) => rat(-1),
                        _ => rat(0),
                    })
                    .collect()
            })
            .collect();
        let e = self.linear(both, m)?;
        Ok(self.tag(e, a.ty().join(b.ty()).join(Ty::Int), "minus"))
    }

    /// `-x`.
    pub fn neg(&mut self, x: Expr) -> R {
        self.scale(x, -1)
    }

    /// Coordinate-wise maximum, `[a - b]_+ + b`.
    pub fn max(&mut self, a: Expr, b: Expr) -> R {
        let d = self.minus(a, b)?;
        let r = self.relu(d)?;
        let e = self.add(r, b)?;
        Ok(self.tag(e, a.ty().join(b.ty()), "max"))
    }

    /// Coordinate-wise minimum, `a - [a - b]_+`.
    pub fn min(&mut self, a: Expr, b: Expr) -> R {
        let d = self.minus(a, b)?;
        let r = self.relu(d)?;
        let e = self.minus(a, r)?;
        Ok(self.tag(e, a.ty().join(b.ty()), "min"))
    }

    /// Logical and of values in {0, 1}, as their minimum.
    pub fn and(&mut self, a: Expr, b: Expr) -> R {
        let e = self.min(a, b)?;
        Ok(self.tag(e, Ty::Bool, "and"))
    }

    /// Logical not, `1 - x`.
    pub fn not(&mut self, x: Expr) -> R {
        let m = identity(x.dim()).into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect();
        let e = self.affine(x, m, vec![rat(1); x.dim()])?;
        Ok(self.tag(e, Ty::Bool, "not"))
    }

    /// Logical or, `not(not a and not b)`.
    pub fn or(&mut self, a: Expr, b: Expr) -> R {
        let na = self.not(a)?;
        let nb = self.not(b)?;
        let both = self.and(na, nb)?;
        let e = self.not(both)?;
        Ok(self.tag(e, Ty::Bool, "or"))
    }

    /// Exclusive or, `(a or b) and not (a and b)`.
    pub fn xor(&mut self, a: Expr, b: Expr) -> R {
        let either = self.or(a, b)?;
        let both = self.and(a, b)?;
        let not_both = self.not(both)?;
        let e = self.and(either, not_both)?;
        Ok(self.tag(e, Ty::Bool, "xor"))
    }

    /// `a <= b` for integers, `[b - a + 1]_+ - [b - a]_+`.
    pub fn leq(&mut self, a: Expr, b: Expr) -> R {
        let gap = self.minus(b, a)?;
        let shifted = self.add_const(gap, 1)?;
        let hi = self.relu(shifted)?;
        let lo = self.relu(gap)?;
        let e = self.minus(hi, lo)?;
        Ok(self.tag(e, Ty::Bool, "leq"))
    }

    /// `a >= b` for integers.
    pub fn geq(&mut self, a: Expr, b: Expr) -> R {
        let e = self.leq(b, a)?;
        Ok(self.tag(e, Ty::Bool, "geq"))
    }

    /// `a < b` for integers, `a <= b - 1`.
    pub fn less(&mut self, a: Expr, b: Expr) -> R {
        let b1 = self.add_const(b, -1)?;
        let e = self.leq(a, b1)?;
        Ok(self.tag(e, Ty::Bool, "less"))
    }

    /// `a > b` for integers.
    pub fn greater(&mut self, a: Expr, b: Expr) -> R {
        let e = self.less(b, a)?;
        Ok(self.tag(e, Ty::Bool, "greater"))
    }

    /// Equality of integer vectors: both `leq` directions in every
    /// coordinate, joined by `and`. The result is a scalar.
    pub fn equal(&mut self, a: Expr, b: Expr) -> R {
        require_same("equal", a, b)?;
        let le = self.leq(a, b)?;
        let ge = self.leq(b, a)?;
        let mut acc = self.and(le, ge)?;
        if a.dim() > 1 {
            let mut scalar = self.select(acc, 0)?;
            for i in 1..a.dim() {
                let c = self.select(acc, i)?;
                scalar = self.and(scalar, c)?;
            }
            acc = scalar;
        }
        Ok(self.tag(acc, Ty::Bool, "equal"))
    }

    /// Negated [`Program::equal`].
    pub fn neq(&mut self, a: Expr, b: Expr) -> R {
        let eq = self.equal(a, b)?;
        let e = self.not(eq)?;
        Ok(self.tag(e, Ty::Bool, "neq"))
    }

    /// Kronecker product. Entry `i * b.dim + j` is `a_i * b_j`, so one-hot
    /// arguments give the one-hot of the pair.
    pub fn kron(&mut self, a: Expr, b: Expr) -> R {
        let (da, db) = (a.dim(), b.dim());
        let ea = (0..da * db).map(|r| (0..da).map(|i| if r / db == i { rat(1) } else { rat(0) }).collect()).collect();
        let eb = (0..da * db).map(|r| (0..db).map(|j| if r % db == j { rat(1) } else { rat(0) }).collect()).collect();
        let wide_a = self.linear(a, ea)?;
        let wide_b = self.linear(b, eb)?;
        let e = self.multiply(wide_a, wide_b)?;
        let ty = if a.ty() == Ty::OneHot && b.ty() == Ty::OneHot { Ty::OneHot } else { a.ty().join(b.ty()) };
        Ok(self.tag(e, ty, "kron"))
    }

    /// Running mean over all prefixes, attention with constant query and
    /// key.
    pub fn average(&mut self, x: Expr) -> R {
        let one = self.one();
        let e = self.aha(one, one, x)?;
        Ok(self.tag(e, Ty::Real, "average"))
    }

    /// Running maximum over all prefixes, per coordinate. The query is the
    /// constant 1 and the key is the coordinate itself, so the maximizers
    /// are found for values of either sign.
    pub fn seq_max(&mut self, x: Expr) -> R {
        let one = self.one();
        let mut parts = Vec::with_capacity(x.dim());
        for i in 0..x.dim() {
            let c = if x.dim() == 1 { x } else { self.select(x, i)? };
            parts.push(self.aha(one, c, c)?);
        }
        let e = if parts.len() == 1 { parts[0] } else { self.concat(&parts)? };
        let ty = x.ty().join(x.ty());
        Ok(self.tag(e, ty, "seq_max"))
    }

    /// Running minimum, `-seq_max(-x)`.
    pub fn seq_min(&mut self, x: Expr) -> R {
        let n = self.neg(x)?;
        let m = self.seq_max(n)?;
        let e = self.neg(m)?;
        Ok(self.tag(e, x.ty().join(x.ty()), "seq_min"))
    }

    /// Running conjunction of values in {0, 1}.
    pub fn seq_and(&mut self, x: Expr) -> R {
        let e = self.seq_min(x)?;
        Ok(self.tag(e, Ty::Bool, "seq_and"))
    }

    /// Running disjunction of values in {0, 1}.
    pub fn seq_or(&mut self, x: Expr) -> R {
        let e = self.seq_max(x)?;
        Ok(self.tag(e, Ty::Bool, "seq_or"))
    }

    /// `cond * yes + (1 - cond) * no` for a scalar condition in {0, 1}.
    pub fn if_then_else(&mut self, cond: Expr, yes: Expr, no: Expr) -> R {
        require_scalar("if_then_else", cond)?;
        require_same("if_then_else", yes, no)?;
        let d = yes.dim();
        let not_cond = self.not(cond)?;
        let (c, nc) = if d == 1 { (cond, not_cond) } else { (self.broadcast(cond, d)?, self.broadcast(not_cond, d)?) };
        let a = self.multiply(c, yes)?;
        let b = self.multiply(nc, no)?;
        let e = self.add(a, b)?;
        let ty = if yes.ty() == no.ty() { yes.ty() } else { yes.ty().join(no.ty()) };
        Ok(self.tag(e, ty, "if_then_else"))
    }

    /// `1 / n`, the mean of the first-position indicator.
    pub fn inv_seq_len(&mut self) -> R {
        if let Some(&e) = self.cache.get("inv_seq_len") {
            return Ok(e);
        }
        let n = self.seq_len();
        let one = self.one();
        let first = self.equal(n, one)?;
        let avg = self.average(first)?;
        let e = self.tag(avg, Ty::Real, "inv_seq_len");
        self.cache.insert("inv_seq_len", e);
        Ok(e)
    }

    fn geq_zero(&mut self, x: Expr) -> R {
        let shifted = self.add_const(x, 1)?;
        let hi = self.relu(shifted)?;
        let lo = self.relu(x)?;
        let e = self.minus(hi, lo)?;
        Ok(self.tag(e, Ty::Bool, "geq_zero"))
    }

    /// Indicator of `n == k` for `k >= 1`, from `1 / n` alone: both
    /// `k + 1 - k(k+1)/n` and `k(k+1)/n - k - 1` pass the `>= 0` test only
    /// at `n = k`.
    pub fn is_pos_k(&mut self, k: u64) -> R {
        if k == 0 {
            return Err(FaspError::Dim { op: "is_pos_k", expected: 1, got: 0 });
        }
        let kk = (k * (k + 1)) as i64;
        let inv = self.inv_seq_len()?;
        let up = self.affine(inv, vec![vec![rat(-kk)]], vec![rat(k as i64 + 1)])?;
        let down = self.affine(inv, vec![vec![rat(kk)]], vec![rat(-(k as i64) - 1)])?;
        let a = self.geq_zero(up)?;
        let b = self.geq_zero(down)?;
        let e = self.and(a, b)?;
        Ok(self.tag(e, Ty::Bool, "is_pos_k"))
    }

    /// Rightmost-hard attention on integer query and key: ties in `q . k`
    /// are broken toward the latest prefix by the extra score `-1/j`.
    pub fn rha(&mut self, q: Expr, k: Expr, v: Expr) -> R {
        require_same("rha", q, k)?;
        let one = self.one();
        let inv = self.inv_seq_len()?;
        let neg_inv = self.neg(inv)?;
        let q1 = self.concat(&[q, one])?;
        let k1 = self.concat(&[k, neg_inv])?;
        let e = self.aha(q1, k1, v)?;
        Ok(self.tag(e, v.ty(), "rha"))
    }

    /// The value at the latest prefix whose integer key is nearest to the
    /// query in Euclidean distance. The score `2 q . k - k . k` differs from
    /// `-|q - k|^2` by a term that depends on the query only.
    pub fn rightmost_best_match(&mut self, q: Expr, k: Expr, v: Expr) -> R {
        require_same("rightmost_best_match", q, k)?;
        let one = self.one();
        let q1 = self.concat(&[q, one])?;
        let k2 = self.scale(k, 2)?;
        let sq = self.square(k)?;
        let norm = self.coord_sum(sq)?;
        let neg_norm = self.neg(norm)?;
        let k1 = self.concat(&[k2, neg_norm])?;
        let e = self.rha(q1, k1, v)?;
        Ok(self.tag(e, v.ty(), "rightmost_best_match"))
    }

    /// The value at the latest prefix whose key equals the query, or
    /// `default` when no key does.
    pub fn rightmost_exact_match(&mut self, q: Expr, k: Expr, v: Expr, default: Expr) -> R {
        let nearest = self.rightmost_best_match(q, k, k)?;
        let hit = self.equal(nearest, q)?;
        let found = self.rightmost_best_match(q, k, v)?;
        let e = self.if_then_else(hit, found, default)?;
        Ok(self.tag(e, v.ty().join(default.ty()), "rightmost_exact_match"))
    }

    /// Running sum over all prefixes, `average(x) * n`.
    pub fn sum(&mut self, x: Expr) -> R {
        let avg = self.average(x)?;
        let n = self.seq_len();
        let wide = if x.dim() == 1 { n } else { self.broadcast(n, x.dim())? };
        let e = self.multiply(avg, wide)?;
        let ty = x.ty().join(Ty::Int);
        Ok(self.tag(e, ty, "sum"))
    }
}
