//! Einstein-style house puzzles solved by propagation and branching.
//!
//! The trace keeps a domain of candidate values for every house and
//! category. Each block prints the domains, applies every live constraint
//! once inside its own `[CALL]` (pinned-value logic, then relational
//! logic, then the domain diffs after `[SEP]`), and hands the resulting
//! state to a tail call `[SEP] [CALL] ====== Possible Assignments After
//! Propagation ====== … [RETURN]`. An unsolved state branches on the first
//! house and category with several candidates.

use std::fmt;

use pencil_core::{Token, TokenSeq};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emit::Emitter;
use crate::{check_range, TaskError, Trace};

/// Smallest supported house or category count.
pub const MIN_SIZE: usize = 3;
/// Largest supported house or category count.
pub const MAX_SIZE: usize = 5;

/// An attribute category. Instances with `c` categories use the first `c`
/// in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Color,
    Nationality,
    Pet,
    Drink,
    Cigarette,
}

impl Category {
    /// All categories in declaration order.
    pub const ALL: [Category; 5] =
        [Category::Color, Category::Nationality, Category::Pet, Category::Drink, Category::Cigarette];

    /// The printed category name.
    pub fn name(self) -> &'static str {
        match self {
            Category::Color => "Color",
            Category::Nationality => "Nationality",
            Category::Pet => "Pet",
            Category::Drink => "Drink",
            Category::Cigarette => "Cigarette",
        }
    }

    fn pool(self) -> [&'static str; 5] {
        match self {
            Category::Color => ["Blue", "Green", "Red", "White", "Yellow"],
            Category::Nationality => ["Brit", "German", "Swede", "Dane", "Norwegian"],
            Category::Pet => ["Birds", "Dogs", "Fish", "Cats", "Horses"],
            Category::Drink => ["Coffee", "Milk", "Tea", "Beer", "Water"],
            Category::Cigarette => ["Blends", "Dunhill", "PallMall", "BlueMaster", "Prince"],
        }
    }

    /// The `h` values used with `h` houses, in alphabetical order.
    pub fn values(self, h: usize) -> Vec<&'static str> {
        let mut v = self.pool()[..h.min(5)].to_vec();
        v.sort_unstable();
        v
    }

    fn phrase(self, value: &str) -> String {
        match self {
            Category::Color => format!("the {value} house"),
            Category::Nationality => format!("the {value}"),
            Category::Pet => format!("the one who keeps {value}"),
            Category::Drink => format!("the one who drinks {value}"),
            Category::Cigarette => format!("the one who smokes {value}"),
        }
    }
}

/// One attribute value of one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Attr {
    pub category: Category,
    pub value: &'static str,
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.value)
    }
}

/// How the two attributes of a constraint are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `lhs` is in the house immediately right of `rhs`.
    Right,
    /// `lhs` is in the house immediately left of `rhs`.
    Left,
    /// `lhs` and `rhs` share a house.
    Same,
}

impl Relation {
    /// The keyword used in trace lines.
    pub fn keyword(self) -> &'static str {
        match self {
            Relation::Right => "RIGHT",
            Relation::Left => "LEFT",
            Relation::Same => "SAME",
        }
    }

    fn phrase(self) -> &'static str {
        match self {
            Relation::Right => "is immediately to the right of",
            Relation::Left => "is immediately to the left of",
            Relation::Same => "is the same house as",
        }
    }

    fn holds(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Relation::Right => lhs == rhs + 1,
            Relation::Left => lhs + 1 == rhs,
            Relation::Same => lhs == rhs,
        }
    }
}

/// A binary constraint between two attribute values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub kind: Relation,
    pub lhs: Attr,
    pub rhs: Attr,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.lhs.category.phrase(self.lhs.value),
            self.kind.phrase(),
            self.rhs.category.phrase(self.rhs.value)
        )
    }
}

/// A full assignment: `assignment[house][category index]`.
pub type Assignment = Vec<Vec<&'static str>>;

/// A puzzle with its unique solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleInstance {
    /// Number of houses.
    pub houses: usize,
    /// Categories in use, in declaration order.
    pub categories: Vec<Category>,
    /// Constraints, numbered from 1 in prompts and traces.
    pub constraints: Vec<Constraint>,
    /// The unique solution.
    pub solution: Assignment,
}

impl PuzzleInstance {
    /// Builds an instance, solving it to check that exactly one solution
    /// exists.
    pub fn new(houses: usize, n_categories: usize, constraints: Vec<Constraint>) -> Result<Self, TaskError> {
        check_range("house count", houses, MIN_SIZE, MAX_SIZE)?;
        check_range("category count", n_categories, MIN_SIZE, MAX_SIZE)?;
        let categories = Category::ALL[..n_categories].to_vec();
        let frame = Frame::new(houses, &categories);
        for c in &constraints {
            for attr in [c.lhs, c.rhs] {
                frame.locate(attr)?;
            }
            if c.kind == Relation::Same && c.lhs.category == c.rhs.category {
                return Err(TaskError::Parse(format!("SAME constraint within one category: {c}")));
            }
        }
        let mut found = solve(&frame, &constraints, 2)?;
        if found.len() != 1 {
            return Err(TaskError::NotUnique(found.len()));
        }
        let solution = found.pop().expect("exactly one solution");
        Ok(PuzzleInstance { houses, categories, constraints, solution })
    }

    /// The prompt `<|startoftext|> Constraint#1 : … <|endofprompt|>`.
    pub fn prompt(&self) -> TokenSeq {
        let mut e = Emitter::new();
        e.token(Token::StartOfText);
        e.words(&self.to_string());
        e.token(Token::EndOfPrompt);
        e.out
    }

    /// Parses the printed constraint list for the given sizes.
    pub fn parse(text: &str, houses: usize, n_categories: usize) -> Result<Self, TaskError> {
        check_range("house count", houses, MIN_SIZE, MAX_SIZE)?;
        check_range("category count", n_categories, MIN_SIZE, MAX_SIZE)?;
        let categories = &Category::ALL[..n_categories];
        let lookup = |word: &str| {
            categories.iter().find_map(|&category| {
                category.values(houses).into_iter().find(|v| *v == word).map(|value| Attr { category, value })
            })
        };
        let mut chunks: Vec<Vec<&str>> = Vec::new();
        for word in text.split_whitespace() {
            if word == "<|startoftext|>" || word == "<|endofprompt|>" {
                continue;
            }
            if let Some(num) = word.strip_prefix("Constraint#") {
                if num != (chunks.len() + 1).to_string() {
                    return Err(TaskError::Parse(format!("expected Constraint#{}", chunks.len() + 1)));
                }
                chunks.push(Vec::new());
            } else if let Some(chunk) = chunks.last_mut() {
                chunk.push(word);
            } else {
                return Err(TaskError::Parse(format!("unexpected {word:?} before the first constraint")));
            }
        }
        let constraints = chunks
            .iter()
            .map(|words| {
                let attrs: Vec<Attr> = words.iter().filter_map(|w| lookup(w)).collect();
                let kind = if words.contains(&"right") {
                    Relation::Right
                } else if words.contains(&"left") {
                    Relation::Left
                } else if words.contains(&"same") {
                    Relation::Same
                } else {
                    return Err(TaskError::Parse(format!("no relation in {:?}", words.join(" "))));
                };
                match attrs[..] {
                    [lhs, rhs] => Ok(Constraint { kind, lhs, rhs }),
                    _ => Err(TaskError::Parse(format!("expected two values in {:?}", words.join(" ")))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        PuzzleInstance::new(houses, n_categories, constraints)
    }
}

impl fmt::Display for PuzzleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "Constraint#{} : {c}", i + 1)?;
        }
        Ok(())
    }
}

/// Value tables for one puzzle size.
struct Frame {
    houses: usize,
    categories: Vec<Category>,
    values: Vec<Vec<&'static str>>,
}

impl Frame {
    fn new(houses: usize, categories: &[Category]) -> Frame {
        Frame { houses, categories: categories.to_vec(), values: categories.iter().map(|c| c.values(houses)).collect() }
    }

    /// Category index and value bit of an attribute.
    fn locate(&self, attr: Attr) -> Result<(usize, u32), TaskError> {
        let c = self
            .categories
            .iter()
            .position(|&c| c == attr.category)
            .ok_or_else(|| TaskError::Parse(format!("category {} not in use", attr.category.name())))?;
        let v = self.values[c]
            .iter()
            .position(|&v| v == attr.value)
            .ok_or_else(|| TaskError::Parse(format!("{} is not a {} value", attr.value, attr.category.name())))?;
        Ok((c, 1 << v))
    }

    fn full(&self) -> u32 {
        (1 << self.houses) - 1
    }
}

/// Enumerates solutions by backtracking over value positions, stopping at
/// `limit`. Each step places the unplaced value with the fewest free
/// houses, taking adjacency and same-house constraints into account.
fn solve(frame: &Frame, constraints: &[Constraint], limit: usize) -> Result<Vec<Assignment>, TaskError> {
    let (h, nc) = (frame.houses, frame.categories.len());
    let var = |attr: Attr| -> Result<usize, TaskError> {
        let (c, bit) = frame.locate(attr)?;
        Ok(c * h + bit.trailing_zeros() as usize)
    };
    // links[x] lists (other variable, relation seen from x).
    let mut links: Vec<Vec<(usize, Relation)>> = vec![Vec::new(); nc * h];
    for c in constraints {
        let (l, r) = (var(c.lhs)?, var(c.rhs)?);
        let mirrored = match c.kind {
            Relation::Right => Relation::Left,
            Relation::Left => Relation::Right,
            Relation::Same => Relation::Same,
        };
        links[l].push((r, c.kind));
        links[r].push((l, mirrored));
    }
    struct Search<'a> {
        h: usize,
        links: &'a [Vec<(usize, Relation)>],
        pos: Vec<Option<usize>>,
        used: Vec<u32>,
        limit: usize,
        found: Vec<Vec<usize>>,
    }
    impl Search<'_> {
        fn candidates(&self, x: usize) -> u32 {
            let mut mask = !self.used[x / self.h] & ((1 << self.h) - 1);
            for &(y, rel) in &self.links[x] {
                if let Some(p) = self.pos[y] {
                    let allowed = match rel {
                        Relation::Right if p + 1 < self.h => 1 << (p + 1),
                        Relation::Left if p > 0 => 1 << (p - 1),
                        Relation::Same => 1 << p,
                        _ => 0,
                    };
                    mask &= allowed;
                }
            }
            mask
        }

        fn run(&mut self) {
            if self.found.len() >= self.limit {
                return;
            }
            let mut best: Option<(usize, u32)> = None;
            for x in 0..self.pos.len() {
                if self.pos[x].is_none() {
                    let m = self.candidates(x);
                    if best.is_none_or(|(_, b)| m.count_ones() < b.count_ones()) {
                        best = Some((x, m));
                    }
                }
            }
            let Some((x, mut mask)) = best else {
                self.found.push(self.pos.iter().map(|p| p.expect("complete")).collect());
                return;
            };
            while mask != 0 {
                let house = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                self.pos[x] = Some(house);
                self.used[x / self.h] |= 1 << house;
                self.run();
                self.used[x / self.h] &= !(1 << house);
                self.pos[x] = None;
            }
        }
    }
    let mut search = Search { h, links: &links, pos: vec![None; nc * h], used: vec![0; nc], limit, found: Vec::new() };
    search.run();
    Ok(search
        .found
        .into_iter()
        .map(|pos| {
            let mut a = vec![vec![""; nc]; h];
            for (x, &house) in pos.iter().enumerate() {
                a[house][x / h] = frame.values[x / h][x % h];
            }
            a
        })
        .collect())
}

/// Lists every solution of the puzzle's constraints.
pub fn brute_force_puzzle(p: &PuzzleInstance) -> Result<Vec<Assignment>, TaskError> {
    check_range("house count", p.houses, MIN_SIZE, MAX_SIZE)?;
    check_range("category count", p.categories.len(), MIN_SIZE, MAX_SIZE)?;
    solve(&Frame::new(p.houses, &p.categories), &p.constraints, usize::MAX)
}

/// Draws a random solution, harvests every constraint it satisfies, then
/// drops constraints in shuffled order while the solution stays unique.
pub fn gen_puzzle(h: usize, c: usize, seed: u64) -> Result<PuzzleInstance, TaskError> {
    check_range("house count", h, MIN_SIZE, MAX_SIZE)?;
    check_range("category count", c, MIN_SIZE, MAX_SIZE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let categories = Category::ALL[..c].to_vec();
    let frame = Frame::new(h, &categories);
    let mut solution: Assignment = vec![Vec::with_capacity(c); h];
    for values in &frame.values {
        let mut perm = values.clone();
        perm.shuffle(&mut rng);
        for (house, v) in perm.into_iter().enumerate() {
            solution[house].push(v);
        }
    }
    let attr = |house: usize, ci: usize| Attr { category: categories[ci], value: solution[house][ci] };
    let mut candidates = Vec::new();
    for house in 0..h {
        for a in 0..c {
            for b in a + 1..c {
                let (x, y) = (attr(house, a), attr(house, b));
                let (lhs, rhs) = if rng.gen_bool(0.5) { (x, y) } else { (y, x) };
                candidates.push(Constraint { kind: Relation::Same, lhs, rhs });
            }
        }
    }
    for house in 0..h - 1 {
        for a in 0..c {
            for b in 0..c {
                let (x, y) = (attr(house, a), attr(house + 1, b));
                candidates.push(if rng.gen_bool(0.5) {
                    Constraint { kind: Relation::Right, lhs: y, rhs: x }
                } else {
                    Constraint { kind: Relation::Left, lhs: x, rhs: y }
                });
            }
        }
    }
    candidates.shuffle(&mut rng);
    let mut kept = candidates;
    let mut i = 0;
    while i < kept.len() {
        let dropped = kept.remove(i);
        if solve(&frame, &kept, 2)?.len() != 1 {
            kept.insert(i, dropped);
            i += 1;
        }
    }
    Ok(PuzzleInstance { houses: h, categories, constraints: kept, solution })
}

/// Candidate domains, `dom[house][category index]` as value bitmasks.
type Domains = Vec<Vec<u32>>;

struct Tracer<'a> {
    p: &'a PuzzleInstance,
    frame: Frame,
    cons: Vec<((usize, u32), (usize, u32))>,
    e: Emitter,
}

impl Tracer<'_> {
    fn name(&self, c: usize, bit: u32) -> &'static str {
        self.frame.values[c][bit.trailing_zeros() as usize]
    }

    fn cat(&self, c: usize) -> &'static str {
        self.frame.categories[c].name()
    }

    fn possibilities(&self, c: usize, mask: u32) -> String {
        if mask == 0 {
            return "0 possibilities empty".into();
        }
        let mut s = format!("{} possibilities", mask.count_ones());
        for (i, v) in self.frame.values[c].iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.push(' ');
                s.push_str(v);
            }
        }
        s
    }

    fn say(&mut self, text: &str) {
        self.e.words(text);
    }

    fn state(&mut self, dom: &Domains) {
        for (h, row) in dom.iter().enumerate() {
            self.say(&format!("House#{}", h + 1));
            for (c, &mask) in row.iter().enumerate() {
                let line = if mask.count_ones() == 1 {
                    format!("{} category is {}", self.cat(c), self.name(c, mask))
                } else {
                    format!("{} category have {}", self.cat(c), self.possibilities(c, mask))
                };
                self.say(&line);
            }
        }
    }

    fn live_list(&mut self, live: &[usize]) {
        self.say("Unsatisfied constraints are");
        for &k in live {
            self.say(&format!("Constraint#{}", k + 1));
        }
    }

    fn close(&mut self, solution: Option<&Domains>) {
        self.e.token(Token::Sep);
        match solution {
            Some(dom) => {
                self.say("Solution");
                self.state(dom);
            }
            None => self.say("No Solution"),
        }
        self.e.token(Token::Return);
    }

    /// House holding `bit` as its only candidate in category `c`.
    fn pinned(dom: &Domains, c: usize, bit: u32) -> Option<usize> {
        dom.iter().position(|row| row[c] == bit)
    }

    fn valid(&self, dom: &Domains) -> bool {
        let all = self.frame.full();
        (0..self.frame.categories.len()).all(|c| dom.iter().fold(0, |acc, row| acc | row[c]) == all)
            && self.cons.iter().enumerate().all(|(k, _)| self.satisfied(dom, k))
    }

    fn satisfied(&self, dom: &Domains, k: usize) -> bool {
        let ((lc, lb), (rc, rb)) = self.cons[k];
        match (Self::pinned(dom, lc, lb), Self::pinned(dom, rc, rb)) {
            (Some(l), Some(r)) => self.p.constraints[k].kind.holds(l, r),
            _ => false,
        }
    }

    fn phase1(&mut self, dom: &mut Domains, k: usize) {
        let ((lc, _), (rc, _)) = self.cons[k];
        let c = &self.p.constraints[k];
        self.say(&format!(
            "PHASE 1: Single-value logic for {} and {} under {} constraint",
            c.lhs,
            c.rhs,
            c.kind.keyword()
        ));
        let cats: Vec<usize> = if lc == rc { vec![lc] } else { vec![lc, rc] };
        let n = self.frame.houses;
        loop {
            let mut changed = false;
            for &c in &cats {
                for h in 0..n {
                    let v = dom[h][c];
                    if v.count_ones() != 1 {
                        continue;
                    }
                    for h2 in (0..n).filter(|&h2| h2 != h) {
                        if dom[h2][c] & v != 0 {
                            dom[h2][c] &= !v;
                            changed = true;
                            let name = self.name(c, v);
                            self.say(&format!(
                                "Removing {name} from House#{} {} category because {name} is pinned in another house",
                                h2 + 1,
                                self.cat(c)
                            ));
                        }
                    }
                }
                for i in 0..n {
                    let v = 1u32 << i;
                    let holders: Vec<usize> = (0..n).filter(|&h| dom[h][c] & v != 0).collect();
                    if let [h] = holders[..] {
                        if dom[h][c] != v {
                            dom[h][c] = v;
                            changed = true;
                            self.say(&format!(
                                "Forcing {} in House#{} {} category because it can only appear here",
                                self.name(c, v),
                                h + 1,
                                self.cat(c)
                            ));
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn phase2(&mut self, dom: &mut Domains, k: usize) {
        let c = self.p.constraints[k];
        let (l, r) = self.cons[k];
        self.say(&format!("PHASE 2: Handling relation {} {} {}", c.lhs, c.kind.keyword(), c.rhs));
        match c.kind {
            Relation::Right => {
                self.say(&format!("{} is immediately RIGHT of {}", c.lhs, c.rhs));
                self.adjacent(dom, c.kind, (l, c.lhs), (r, c.rhs), true);
            }
            Relation::Left => {
                self.say(&format!("{} is immediately LEFT of {}", c.lhs, c.rhs));
                self.adjacent(dom, c.kind, (r, c.rhs), (l, c.lhs), false);
            }
            Relation::Same => {
                self.say(&format!("{} must be in the SAME house as {}", c.lhs, c.rhs));
                self.same(dom, (l, c.lhs), (r, c.rhs));
            }
        }
    }

    /// Adjacency logic for `right` sitting immediately right of `left`.
    /// `right_first` says which of the two is the constraint's lhs.
    fn adjacent(
        &mut self,
        dom: &mut Domains,
        kind: Relation,
        right: ((usize, u32), Attr),
        left: ((usize, u32), Attr),
        right_first: bool,
    ) {
        let n = self.frame.houses;
        let (((rc, rb), rn), ((lc, lb), ln)) = (right, left);
        let order = if right_first { [true, false] } else { [false, true] };
        for is_right in order {
            if is_right {
                if dom[0][rc] & rb != 0 {
                    dom[0][rc] &= !rb;
                    self.say(&format!(
                        "Removing {rn} from House#1 because {rn} can't be in the leftmost house if it's to the RIGHT of {ln}"
                    ));
                }
            } else if dom[n - 1][lc] & lb != 0 {
                dom[n - 1][lc] &= !lb;
                let reason = if kind == Relation::Right { String::new() } else { format!("because {ln} ") };
                self.say(&format!(
                    "Removing {ln} from House#{n} {reason}can't be in the rightmost house if it's to the LEFT of {rn}"
                ));
            }
        }
        if let Some(h) = Self::pinned(dom, lc, lb) {
            for h2 in (0..n).filter(|&h2| h2 != h + 1) {
                if dom[h2][rc] & rb != 0 {
                    dom[h2][rc] &= !rb;
                    self.say(&format!(
                        "Since {ln} is pinned to House#{} , removing {rn} from House#{} because {rn} must be right of House#{}",
                        h + 1,
                        h2 + 1,
                        h + 1
                    ));
                }
            }
            if h + 1 < n && dom[h + 1][rc] & rb != 0 && dom[h + 1][rc] != rb {
                dom[h + 1][rc] = rb;
                self.say(&format!("Placing {rn} in House#{} because {ln} is pinned to House#{}", h + 2, h + 1));
            }
        }
        if let Some(h) = Self::pinned(dom, rc, rb) {
            for h2 in (0..n).filter(|&h2| h2 + 1 != h) {
                if dom[h2][lc] & lb != 0 {
                    dom[h2][lc] &= !lb;
                    self.say(&format!("{ln} must be exactly one house to the LEFT , removing from House#{}", h2 + 1));
                }
            }
            if h > 0 && dom[h - 1][lc] & lb != 0 && dom[h - 1][lc] != lb {
                dom[h - 1][lc] = lb;
                self.say(&format!("Placing {ln} in House#{h} because {rn} is pinned to House#{}", h + 1));
            }
        }
    }

    fn same(&mut self, dom: &mut Domains, a: ((usize, u32), Attr), b: ((usize, u32), Attr)) {
        let n = self.frame.houses;
        for (((xc, xb), xn), ((yc, yb), yn)) in [(a, b), (b, a)] {
            let Some(h) = Self::pinned(dom, xc, xb) else { continue };
            if dom[h][yc] & yb != 0 && dom[h][yc] != yb {
                dom[h][yc] = yb;
                self.say(&format!("Placing {yn} in House#{} since {xn} is in this house", h + 1));
            }
            for h2 in (0..n).filter(|&h2| h2 != h) {
                if dom[h2][yc] & yb != 0 {
                    dom[h2][yc] &= !yb;
                    self.say(&format!("Since {xn} is pinned to House#{} , removing {yn} from House#{}", h + 1, h2 + 1));
                }
            }
        }
        let (((ac, ab), an), ((bc, bb), bn)) = (a, b);
        for (h, row) in dom.iter_mut().enumerate().take(n) {
            let (has_a, has_b) = (row[ac] & ab != 0, row[bc] & bb != 0);
            if has_b && !has_a {
                row[bc] &= !bb;
                self.say(&format!("House#{} can't hold {an} since it can't hold {bn}", h + 1));
            } else if has_a && !has_b {
                row[ac] &= !ab;
                self.say(&format!("House#{} can't hold {bn} since it can't hold {an}", h + 1));
            }
        }
    }

    fn apply(&mut self, dom: &mut Domains, k: usize) {
        let before = dom.clone();
        self.say(&format!("Applying Constraint#{}", k + 1));
        self.e.token(Token::Call);
        self.phase1(dom, k);
        self.phase2(dom, k);
        self.e.token(Token::Sep);
        let mut any = false;
        for c in 0..self.frame.categories.len() {
            for h in 0..self.frame.houses {
                if before[h][c] != dom[h][c] {
                    any = true;
                    let line = format!(
                        "House#{} {} category changed from {} to {}",
                        h + 1,
                        self.cat(c),
                        self.possibilities(c, before[h][c]),
                        self.possibilities(c, dom[h][c])
                    );
                    self.say(&line);
                }
            }
        }
        if !any {
            self.say("No changes from this constraint");
        }
        self.e.token(Token::Return);
    }

    /// Prints the status of a state. Returns `Some(result)` when the state
    /// is final, after closing the current call.
    fn settle(&mut self, dom: &Domains) -> Option<Option<Domains>> {
        if dom.iter().flatten().all(|m| m.count_ones() == 1) {
            if self.valid(dom) {
                self.say("=> Puzzle is solved");
                self.close(Some(dom));
                return Some(Some(dom.clone()));
            }
            self.say("=> Puzzle is inconsistent");
            self.close(None);
            return Some(None);
        }
        self.say("=> Puzzle not solved yet");
        None
    }

    fn block(&mut self, mut dom: Domains, mut live: Vec<usize>) -> Option<Domains> {
        self.e.token(Token::Call);
        self.say("====== Possible Assignments ======");
        self.state(&dom);
        self.live_list(&live);
        if let Some(done) = self.settle(&dom) {
            return done;
        }
        self.say("====== Propagation ======");
        for k in live.clone() {
            self.apply(&mut dom, k);
            if dom.iter().flatten().any(|&m| m == 0) {
                self.close(None);
                return None;
            }
            if self.satisfied(&dom, k) {
                self.say(&format!("Remove Constraint#{} because it is satisfied", k + 1));
                live.retain(|&j| j != k);
            }
        }
        self.e.token(Token::Sep);
        self.e.token(Token::Call);
        self.say("====== Possible Assignments After Propagation ======");
        self.state(&dom);
        self.live_list(&live);
        self.e.token(Token::Return);
        if let Some(done) = self.settle(&dom) {
            return done;
        }
        self.say("====== Branch ======");
        let (h, c) = (0..self.frame.houses)
            .flat_map(|h| (0..self.frame.categories.len()).map(move |c| (h, c)))
            .find(|&(h, c)| dom[h][c].count_ones() >= 2)
            .expect("an unsettled state has a domain with several values");
        let line =
            format!("Branching on House#{} {} category with {}", h + 1, self.cat(c), self.possibilities(c, dom[h][c]));
        self.say(&line);
        for i in 0..self.frame.houses {
            let v = 1u32 << i;
            if dom[h][c] & v == 0 {
                continue;
            }
            let line = format!("Trying possibility {} in House#{} {} category", self.name(c, v), h + 1, self.cat(c));
            self.say(&line);
            let mut next = dom.clone();
            next[h][c] = v;
            if let Some(found) = self.block(next, live.clone()) {
                self.close(Some(&found));
                return Some(found);
            }
        }
        self.close(None);
        None
    }
}

/// Solves the puzzle by propagation and branching, returning the
/// nationality of the fish owner with the scaffolded trace.
pub fn puzzle_trace(p: &PuzzleInstance) -> Result<Trace<&'static str>, TaskError> {
    let found = brute_force_puzzle_limited(p, 2)?;
    if found.len() != 1 {
        return Err(TaskError::NotUnique(found.len()));
    }
    let frame = Frame::new(p.houses, &p.categories);
    let cons = p
        .constraints
        .iter()
        .map(|c| Ok((frame.locate(c.lhs)?, frame.locate(c.rhs)?)))
        .collect::<Result<Vec<_>, TaskError>>()?;
    let prompt = p.prompt();
    let mut e = Emitter::new();
    e.extend(&prompt);
    let mut t = Tracer { p, frame, cons, e };
    let dom = vec![vec![t.frame.full(); p.categories.len()]; p.houses];
    let solved = t.block(dom, (0..p.constraints.len()).collect()).ok_or(TaskError::NotUnique(0))?;
    let (pet, nat) = (2, 1);
    let fish = 1 << t.frame.values[pet].iter().position(|&v| v == "Fish").expect("Fish is a pet value");
    let house = solved.iter().position(|row| row[pet] == fish).expect("a solved state places every value");
    let owner = t.name(nat, solved[house][nat]);
    t.say(&format!("=> House#{} owns the Fish", house + 1));
    t.say(&format!("=> the {owner} owns the Fish"));
    t.e.token(Token::EndOfText);
    Ok(Trace { answer: owner, prompt, scaffold: t.e.out })
}

fn brute_force_puzzle_limited(p: &PuzzleInstance, limit: usize) -> Result<Vec<Assignment>, TaskError> {
    check_range("house count", p.houses, MIN_SIZE, MAX_SIZE)?;
    check_range("category count", p.categories.len(), MIN_SIZE, MAX_SIZE)?;
    solve(&Frame::new(p.houses, &p.categories), &p.constraints, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pencil_core::render;

    #[test]
    fn value_tables_are_sorted_prefixes() {
        assert_eq!(Category::Nationality.values(5), ["Brit", "Dane", "German", "Norwegian", "Swede"]);
        assert_eq!(Category::Pet.values(3), ["Birds", "Dogs", "Fish"]);
    }

    #[test]
    fn generated_puzzles_are_unique_and_minimal() {
        let p = gen_puzzle(3, 3, 4).unwrap();
        assert_eq!(brute_force_puzzle(&p).unwrap(), vec![p.solution.clone()]);
        for i in 0..p.constraints.len() {
            let mut fewer = p.clone();
            fewer.constraints.remove(i);
            assert!(brute_force_puzzle(&fewer).unwrap().len() >= 2);
        }
        assert_eq!(p, gen_puzzle(3, 3, 4).unwrap());
        assert!(gen_puzzle(6, 3, 0).is_err());
    }

    #[test]
    fn prompt_round_trips() {
        let p = gen_puzzle(4, 4, 1).unwrap();
        assert_eq!(PuzzleInstance::parse(&render(&p.prompt()), 4, 4).unwrap(), p);
    }

    #[test]
    fn fully_pinned_puzzle_needs_no_branch() {
        let attr = |category, value| Attr { category, value };
        let same = |a, b| Constraint { kind: Relation::Same, lhs: a, rhs: b };
        let right = |a, b| Constraint { kind: Relation::Right, lhs: a, rhs: b };
        use Category::*;
        let constraints = vec![
            right(attr(Color, "Green"), attr(Color, "Blue")),
            right(attr(Color, "Red"), attr(Color, "Green")),
            same(attr(Color, "Blue"), attr(Nationality, "Brit")),
            same(attr(Color, "Green"), attr(Nationality, "German")),
            same(attr(Color, "Blue"), attr(Pet, "Birds")),
            same(attr(Color, "Green"), attr(Pet, "Dogs")),
        ];
        let p = PuzzleInstance::new(3, 3, constraints).unwrap();
        let t = puzzle_trace(&p).unwrap();
        assert_eq!(t.answer, "Swede");
        assert!(!render(&t.scaffold).contains("====== Branch ======"));
    }
}
