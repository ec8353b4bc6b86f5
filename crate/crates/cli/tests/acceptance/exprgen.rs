//! Random expressions, predicates and assignments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tslcheck_core::constraints::{Assignment, BoolExpr, Ground, NumExpr, NumOp, Pred, ShapeExpr, Sort, Symbol, SymbolGen, ValueExpr};
use tslcheck_core::simplify::{Interval, Ranges};

pub struct Vocab {
    pub nums: Vec<Symbol>,
    pub shapes: Vec<Symbol>,
    pub bools: Vec<Symbol>,
    gen: SymbolGen,
}

impl Vocab {
    pub fn new(nums: usize, shapes: usize, bools: usize) -> Vocab {
        let mut gen = SymbolGen::new();
        let mut mk = |k: usize, sort: Sort, hint: &str| (0..k).map(|i| gen.fresh(sort, format!("{hint}{i}"))).collect::<Vec<_>>();
        let nums = mk(nums, Sort::Num, "n");
        let shapes = mk(shapes, Sort::Shape, "s");
        let bools = mk(bools, Sort::Bool, "b");
        Vocab { nums, shapes, bools, gen }
    }
}

pub struct ExprGen<'a> {
    pub r: &'a mut ChaCha8Rng,
    pub v: &'a mut Vocab,
    /// Quantifier bounds are constants.
    pub ground_bounds: bool,
    /// Quantified variables in scope.
    bound: Vec<Symbol>,
}

fn op(r: &mut ChaCha8Rng) -> NumOp {
    [NumOp::Add, NumOp::Sub, NumOp::Mul, NumOp::Div, NumOp::Mod][r.gen_range(0..5)]
}

impl<'a> ExprGen<'a> {
    pub fn new(r: &'a mut ChaCha8Rng, v: &'a mut Vocab) -> Self {
        ExprGen {
            r,
            v,
            ground_bounds: false,
            bound: Vec::new(),
        }
    }

    fn num_sym(&mut self) -> Option<NumExpr> {
        let k = self.v.nums.len() + self.bound.len();
        if k == 0 {
            return None;
        }
        let i = self.r.gen_range(0..k);
        Some(NumExpr::Sym(self.v.nums.get(i).unwrap_or_else(|| &self.bound[i - self.v.nums.len()]).clone()))
    }

    pub fn num(&mut self, depth: u32) -> NumExpr {
        let leaf = depth == 0 || self.r.gen_bool(0.3);
        if leaf {
            return match self.num_sym() {
                Some(s) if self.r.gen_bool(0.6) => s,
                _ => NumExpr::Const(self.r.gen_range(-3..=6)),
            };
        }
        match self.r.gen_range(0..10) {
            0 => NumExpr::rank(self.shape(depth - 1)),
            1 => NumExpr::prod(self.shape(depth - 1)),
            2 => {
                let s = self.shape(depth - 1);
                let i = if self.r.gen_bool(0.7) { NumExpr::Const(self.r.gen_range(0..3)) } else { self.num(depth - 1) };
                NumExpr::index(s, i)
            }
            _ => {
                let o = op(self.r);
                let a = self.num(depth - 1);
                let b = match o {
                    NumOp::Div | NumOp::Mod if self.r.gen_bool(0.6) => NumExpr::Const(*[-3, -2, 2, 3, 4].get(self.r.gen_range(0..5)).unwrap()),
                    _ => self.num(depth - 1),
                };
                NumExpr::Bin(o, Box::new(a), Box::new(b))
            }
        }
    }

    pub fn shape(&mut self, depth: u32) -> ShapeExpr {
        let leaf = depth == 0 || self.r.gen_bool(0.35);
        if leaf {
            if !self.v.shapes.is_empty() && self.r.gen_bool(0.5) {
                let i = self.r.gen_range(0..self.v.shapes.len());
                return ShapeExpr::Sym(self.v.shapes[i].clone());
            }
            let k = self.r.gen_range(0..=3);
            let d = depth.saturating_sub(1);
            return ShapeExpr::Tuple((0..k).map(|_| self.num(d)).collect());
        }
        match self.r.gen_range(0..2) {
            0 => {
                let s = self.shape(depth - 1);
                let bound = |g: &mut Self| if g.r.gen_bool(0.7) { NumExpr::Const(g.r.gen_range(0..=3)) } else { g.num(depth - 1) };
                let lo = bound(self);
                let hi = bound(self);
                s.slice(lo, hi)
            }
            _ => self.shape(depth - 1).concat(self.shape(depth - 1)),
        }
    }

    pub fn boolean(&mut self, depth: u32) -> BoolExpr {
        let leaf = depth == 0 || self.r.gen_bool(0.2);
        if leaf {
            if !self.v.bools.is_empty() && self.r.gen_bool(0.4) {
                let i = self.r.gen_range(0..self.v.bools.len());
                return BoolExpr::Sym(self.v.bools[i].clone());
            }
            return BoolExpr::Const(self.r.gen_bool(0.5));
        }
        let d = depth - 1;
        match self.r.gen_range(0..9) {
            0 => BoolExpr::and(self.boolean(d), self.boolean(d)),
            1 => BoolExpr::or(self.boolean(d), self.boolean(d)),
            2 => BoolExpr::not(self.boolean(d)),
            3 | 4 => {
                let a = self.num(d);
                let b = self.num(d);
                a.lt(b)
            }
            5 => {
                let a = self.shape(d);
                let b = self.shape(d);
                a.eq(b)
            }
            6 => BoolExpr::Eq(Box::new(ValueExpr::Bool(self.boolean(d))), Box::new(ValueExpr::Bool(self.boolean(d)))),
            _ => {
                let a = self.num(d);
                let b = self.num(d);
                a.eq(b)
            }
        }
    }

    pub fn pred(&mut self, depth: u32) -> Pred {
        if depth == 0 || self.r.gen_bool(0.4) {
            return Pred::Atom(self.boolean(depth));
        }
        let d = depth - 1;
        match self.r.gen_range(0..4) {
            0 => Pred::And((0..self.r.gen_range(0..=3)).map(|_| self.pred(d)).collect()),
            1 => Pred::Or((0..self.r.gen_range(0..=3)).map(|_| self.pred(d)).collect()),
            2 => Pred::not(self.pred(d)),
            _ => {
                let var = self.v.gen.fresh(Sort::Num, "i");
                let sym = !self.ground_bounds;
                let lo = if !sym || self.r.gen_bool(0.7) { NumExpr::Const(self.r.gen_range(-1..=2)) } else { self.num(1) };
                let hi = if !sym || self.r.gen_bool(0.7) { NumExpr::Const(self.r.gen_range(-1..=4)) } else { self.num(1) };
                self.bound.push(var.clone());
                let body = self.pred(d);
                self.bound.pop();
                Pred::Forall { var, lo, hi, body: Box::new(body) }
            }
        }
    }

    pub fn value(&mut self, depth: u32) -> ValueExpr {
        match self.r.gen_range(0..3) {
            0 => ValueExpr::Num(self.num(depth)),
            1 => ValueExpr::Shape(self.shape(depth)),
            _ => ValueExpr::Bool(self.boolean(depth)),
        }
    }
}

/// A random assignment of every vocabulary symbol, and interval facts that
/// hold under it for some of the number symbols.
pub fn assignment(r: &mut ChaCha8Rng, v: &Vocab) -> (Assignment, Ranges) {
    let mut rho = Assignment::new();
    let mut ranges = Ranges::new();
    for s in &v.nums {
        let x = r.gen_range(-4..=6);
        rho.insert(s.clone(), Ground::Int(x));
        match r.gen_range(0..4) {
            0 => {
                ranges.insert(s.clone(), Interval::point(x));
            }
            1 => {
                ranges.insert(s.clone(), Interval::range(x - r.gen_range(0..=3), x + r.gen_range(0..=3)));
            }
            2 => {
                ranges.insert(s.clone(), Interval::new(Some(x - r.gen_range(0..=3)), None));
            }
            _ => {}
        }
    }
    for s in &v.shapes {
        let k = r.gen_range(0..=3);
        rho.insert(s.clone(), Ground::Tuple((0..k).map(|_| r.gen_range(0..=4)).collect()));
    }
    for s in &v.bools {
        rho.insert(s.clone(), Ground::Bool(r.gen_bool(0.5)));
    }
    (rho, ranges)
}
