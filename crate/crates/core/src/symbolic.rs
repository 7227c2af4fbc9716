//! Binary words, their run structure, inverse branches of `F`, and the basic
//! intervals `I_ω`.
//!
//! Convention: `x ∈ I_ω` iff `F^{j-1}(x)` lies in the piece named by `ω_j`
//! (`0` → `[0,1/3]`, `1` → `[2/3,1]`). Hence `I_ω = g_{ω_1} ∘ … ∘ g_{ω_k}([0,1])`
//! with `g_s` the inverse branches, and words that share a suffix share all
//! but the outermost compositions. The suffix-tree walker exploits that.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::map::{CookieMap, LogSlope, ScaledPoint};

/// Largest depth for exhaustive enumeration of `Ω_k`.
pub const DEPTH_CAP: usize = 20;

/// Above this subtree depth the walker stops forking parallel tasks.
const PARALLEL_SPLIT_DEPTH: usize = 8;

/// A finite word over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.iter().any(|&s| s > 1) {
            return Err(Error::Precondition("word symbols must be 0 or 1".into()));
        }
        Ok(Self(symbols))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// The word of length `len` whose binary value is `index`.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect())
    }

    /// Lexicographic rank within `Ω_k`; equals the left-to-right position of `I_ω`.
    pub fn index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &s| (acc << 1) | s as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prepend(&self, symbol: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(symbol);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn decompose(&self) -> BlockDecomposition {
        decompose_blocks(self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Precondition(format!("invalid symbol {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word(symbols))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One `0^m 1^n` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub zeros: usize,
    pub ones: usize,
}

/// `ω = 0^{m_1} 1^{n_1} … 0^{m_L} 1^{n_L}` with the tail lengths
/// `|τ_j| = n_j + Σ_{i>j} (m_i + n_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    pub tails: Vec<usize>,
}

impl BlockDecomposition {
    pub fn reconstruct(&self) -> Word {
        let mut v = Vec::new();
        for b in &self.blocks {
            v.extend(std::iter::repeat_n(0, b.zeros));
            v.extend(std::iter::repeat_n(1, b.ones));
        }
        Word(v)
    }
}

/// Maximal-run decomposition; `m_1 = 0` iff the word starts with 1 and
/// `n_L = 0` iff it ends with 0.
pub fn decompose_blocks(word: &Word) -> BlockDecomposition {
    let s = word.symbols();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let z0 = i;
        while i < s.len() && s[i] == 0 {
            i += 1;
        }
        let o0 = i;
        while i < s.len() && s[i] == 1 {
            i += 1;
        }
        blocks.push(Block {
            zeros: o0 - z0,
            ones: i - o0,
        });
    }
    let mut tails = vec![0; blocks.len()];
    let mut after = 0;
    for j in (0..blocks.len()).rev() {
        tails[j] = blocks[j].ones + after;
        after += blocks[j].zeros + blocks[j].ones;
    }
    BlockDecomposition { blocks, tails }
}

/// The preimage of `p` under the branch of `F` on piece `symbol`, and
/// `ln φ'` of the forward step from that preimage (`0` on affine pieces).
pub fn inverse_branch(map: &CookieMap, symbol: u8, p: &ScaledPoint) -> Result<(ScaledPoint, f64)> {
    match (symbol, *p) {
        (1, _) => Ok((ScaledPoint::InJ { n: 0, u: p.raw() }, 0.0)),
        (0, ScaledPoint::Zero) => Ok((ScaledPoint::Zero, 0.0)),
        (0, ScaledPoint::InJ { n, u }) => {
            let t = map.schedule().flow_time(n as u64 + 1);
            let (w, d) = map.flow_pair(-t, u)?;
            // φ'_t(φ_{-t}(u)) = 1 / φ'_{-t}(u)
            Ok((ScaledPoint::InJ { n: n + 1, u: w }, -d.ln()))
        }
        (0, ScaledPoint::Gap { n, v }) => Ok((ScaledPoint::Gap { n: n + 1, v }, 0.0)),
        (0, ScaledPoint::Hole { v }) => Ok((ScaledPoint::Gap { n: 1, v }, 0.0)),
        (s, _) => Err(Error::Precondition(format!("invalid symbol {s}"))),
    }
}

/// `f_ω(p)` for the inverse branch `f_ω` of `F^k|_{I_ω}`, with
/// `log (F^k)'` at the returned point.
pub fn pullback(map: &CookieMap, word: &Word, p: &ScaledPoint) -> Result<(ScaledPoint, LogSlope)> {
    let mut point = *p;
    let mut slope = LogSlope::default();
    for &s in word.symbols().iter().rev() {
        let (q, flow_log) = inverse_branch(map, s, &point)?;
        slope.push(flow_log);
        point = q;
    }
    Ok((point, slope))
}

/// `F^k|_{I_ω}(p)`: forward iteration along the itinerary `ω`.
///
/// Each step applies the branch named by the next symbol. A point that rounding
/// has pushed just across a junction is carried by the continuation of that
/// branch instead of escaping, which keeps endpoints of `I_ω` on their orbit.
pub fn iterate_along(map: &CookieMap, word: &Word, p: &ScaledPoint) -> Result<(ScaledPoint, LogSlope)> {
    let mut point = *p;
    let mut slope = LogSlope::default();
    for &s in word.symbols() {
        let (next, flow_log) = match (s, point) {
            (1, ScaledPoint::InJ { n: 0, .. }) | (0, ScaledPoint::Zero) => map.step(&point)?,
            (0, ScaledPoint::InJ { n, .. }) if n >= 1 => map.step(&point)?,
            (0, ScaledPoint::Gap { .. }) => map.step(&point)?,
            (1, q) => (clamped(3.0 * q.raw() - 2.0)?, 0.0),
            (0, q) => (clamped(3.0 * q.raw())?, 0.0),
            (s, _) => return Err(Error::Precondition(format!("invalid symbol {s}"))),
        };
        slope.push(flow_log);
        point = next;
    }
    Ok((point, slope))
}

fn clamped(x: f64) -> Result<ScaledPoint> {
    ScaledPoint::from_raw(x.clamp(0.0, 1.0))
}

/// `I_ω` with scaled endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicInterval {
    pub word: Word,
    pub left: ScaledPoint,
    pub right: ScaledPoint,
    /// `ln |I_ω|`
    pub log_size: f64,
}

impl BasicInterval {
    fn from_endpoints(word: Word, left: ScaledPoint, right: ScaledPoint) -> Self {
        let log_size = ScaledPoint::log_distance(&left, &right);
        Self {
            word,
            left,
            right,
            log_size,
        }
    }

    pub fn size(&self) -> f64 {
        self.log_size.exp()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left.raw() + self.right.raw())
    }
}

/// Endpoints of `I_ω` as a pair of points carried down the suffix tree.
pub(crate) type Endpoints = (ScaledPoint, ScaledPoint);

pub(crate) fn unit_endpoints() -> Endpoints {
    (ScaledPoint::Zero, ScaledPoint::InJ { n: 0, u: 1.0 })
}

pub(crate) fn pull_endpoints(map: &CookieMap, symbol: u8, e: &Endpoints) -> Result<Endpoints> {
    Ok((
        inverse_branch(map, symbol, &e.0)?.0,
        inverse_branch(map, symbol, &e.1)?.0,
    ))
}

pub fn basic_interval(map: &CookieMap, word: &Word) -> Result<BasicInterval> {
    let mut e = unit_endpoints();
    for &s in word.symbols().iter().rev() {
        e = pull_endpoints(map, s, &e)?;
    }
    Ok(BasicInterval::from_endpoints(word.clone(), e.0, e.1))
}

/// All `2^k` intervals of depth `k`, left to right.
pub fn enumerate_intervals(map: &CookieMap, k: usize, exec: Exec) -> Result<Vec<BasicInterval>> {
    if k > DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: k,
            cap: DEPTH_CAP,
        });
    }
    let mut levels = walk_suffix_tree(
        exec,
        k,
        unit_endpoints(),
        &|e: &Endpoints, s| pull_endpoints(map, s, e),
        &|w: &Word, e: &Endpoints| Ok((w.len() == k).then(|| BasicInterval::from_endpoints(w.clone(), e.0, e.1))),
    )?;
    Ok(levels.swap_remove(k))
}

/// Depth-first walk over all words of length `≤ max_depth`, extending words
/// on the left. `step(state, s)` maps the state of `σ` to that of `sσ`.
///
/// Returns the visit results grouped by depth (`0..=max_depth`), each group in
/// lexicographic order.
pub(crate) fn walk_suffix_tree<S, R, Step, Visit>(
    exec: Exec,
    max_depth: usize,
    root: S,
    step: &Step,
    visit: &Visit,
) -> Result<Vec<Vec<R>>>
where
    S: Send + Sync,
    R: Send,
    Step: Fn(&S, u8) -> Result<S> + Sync,
    Visit: Fn(&Word, &S) -> Result<Option<R>> + Sync,
{
    let mut found = Vec::new();
    walk_node(exec, max_depth, &Word::empty(), &root, step, visit, &mut found)?;
    found.sort_unstable_by_key(|(d, i, _)| (*d, *i));
    let mut levels: Vec<Vec<R>> = (0..=max_depth).map(|_| Vec::new()).collect();
    for (d, _, r) in found {
        levels[d].push(r);
    }
    Ok(levels)
}

fn walk_node<S, R, Step, Visit>(
    exec: Exec,
    max_depth: usize,
    word: &Word,
    state: &S,
    step: &Step,
    visit: &Visit,
    out: &mut Vec<(usize, u64, R)>,
) -> Result<()>
where
    S: Send + Sync,
    R: Send,
    Step: Fn(&S, u8) -> Result<S> + Sync,
    Visit: Fn(&Word, &S) -> Result<Option<R>> + Sync,
{
    if let Some(r) = visit(word, state)? {
        out.push((word.len(), word.index(), r));
    }
    if word.len() == max_depth {
        return Ok(());
    }
    let child = |s: u8| -> Result<Vec<(usize, u64, R)>> {
        let w = word.prepend(s);
        let st = step(state, s)?;
        let mut local = Vec::new();
        walk_node(exec, max_depth, &w, &st, step, visit, &mut local)?;
        Ok(local)
    };
    if word.len() < PARALLEL_SPLIT_DEPTH && max_depth - word.len() > 4 {
        let (a, b) = exec.join(|| child(0), || child(1));
        out.extend(a?);
        out.extend(b?);
    } else {
        out.extend(child(0)?);
        out.extend(child(1)?);
    }
    Ok(())
}
