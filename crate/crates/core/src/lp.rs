//! The fluid LP over arm-context rates:
//!
//! ```text
//! maximize   sum_ij w_ij z_ij
//! subject to sum_j z_ij <= 1/d_i   (per arm)
//!            sum_i z_ij <= f_j     (per context)
//!            z >= 0
//! ```
//!
//! [`solve_lp`] treats it as a max-weight flow `source -> arm -> context -> sink`
//! and returns a basic optimal solution. [`enumerate_extreme_points`] lists
//! every vertex of the polytope for tiny instances, which is what the gap
//! definitions quantify over.

use serde::{Deserialize, Serialize};

use crate::error::{CbbError, Result};
use crate::instance::Instance;

/// Coordinates below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Feasibility slack allowed on the rate constraints.
pub const FEAS_TOL: f64 = 1e-9;
/// Vertices closer than this in every coordinate are the same vertex.
pub const DEDUP_TOL: f64 = 1e-9;
/// `k * m` limit for vertex enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// Objective weights of the LP: either true means or UCB indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LpObjective {
    weights: Vec<Vec<f64>>,
}

impl LpObjective {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&w) {
                    return Err(CbbError::Range { what: format!("weight[{i}][{j}]"), value: w });
                }
            }
        }
        Ok(LpObjective { weights })
    }

    /// Weights that are not restricted to `[0, 1]`; only finiteness and
    /// non-negativity are required. Used for scale-invariance checks.
    pub fn unbounded(weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.iter().flatten().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CbbError::Domain("weights must be finite and non-negative".into()));
        }
        Ok(LpObjective { weights })
    }

    pub fn means(inst: &Instance) -> Self {
        LpObjective { weights: inst.means().to_vec() }
    }

    pub fn ones(k: usize, m: usize) -> Self {
        LpObjective { weights: vec![vec![1.0; m]; k] }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }
}

/// A basic feasible solution of the LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    z: Vec<Vec<f64>>,
    value: f64,
    support: Vec<(usize, usize)>,
}

impl ExtremePoint {
    fn from_rates(mut z: Vec<Vec<f64>>, weights: &[Vec<f64>]) -> Self {
        let mut support = Vec::new();
        let mut value = 0.0;
        for (i, row) in z.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if *v <= ZERO_TOL {
                    *v = 0.0;
                } else {
                    support.push((i, j));
                    value += weights[i][j] * *v;
                }
            }
        }
        ExtremePoint { z, value, support }
    }

    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn rate(&self, arm: usize, context: usize) -> f64 {
        self.z[arm][context]
    }

    /// `sum_j z_ij`: probability that arm `i` is sampled in a round.
    pub fn arm_rate(&self, arm: usize) -> f64 {
        self.z[arm].iter().sum()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    /// Objective value of these rates under another weight matrix.
    pub fn value_under(&self, weights: &[Vec<f64>]) -> f64 {
        self.support.iter().map(|&(i, j)| weights[i][j] * self.z[i][j]).sum()
    }

    /// Checks the rate constraints within [`FEAS_TOL`].
    pub fn is_feasible(&self, inst: &Instance) -> bool {
        let k = inst.num_arms();
        let m = inst.num_contexts();
        if self.z.len() != k || self.z.iter().any(|r| r.len() != m) {
            return false;
        }
        if self.z.iter().flatten().any(|&v| v < -ZERO_TOL) {
            return false;
        }
        let rows_ok = (0..k).all(|i| self.arm_rate(i) <= 1.0 / inst.delay(i) as f64 + FEAS_TOL);
        let cols_ok = (0..m).all(|j| {
            let col: f64 = (0..k).map(|i| self.z[i][j]).sum();
            col <= inst.context_probs()[j] + FEAS_TOL
        });
        rows_ok && cols_ok
    }

    fn approx_eq(&self, other: &ExtremePoint) -> bool {
        self.z
            .iter()
            .flatten()
            .zip(other.z.iter().flatten())
            .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
    }
}

// ---------------------------------------------------------------------------
// Max-weight flow
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

struct Network {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network { arcs: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0, cost: -cost });
    }
}

/// Solves the LP for `obj` and returns an optimal vertex.
///
/// Successive shortest augmenting paths (Bellman-Ford on the residual graph,
/// arcs scanned in arm-major then context order) build an optimal flow; any
/// cycle of strictly-interior arcs left by ties is then cancelled so the
/// result is a basic solution. The output is a deterministic function of the
/// inputs.
pub fn solve_lp(inst: &Instance, obj: &LpObjective) -> ExtremePoint {
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let w = obj.weights();
    assert!(w.len() == k && w.iter().all(|r| r.len() == m), "objective shape mismatch");

    let scale = w.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    if scale <= 0.0 {
        return ExtremePoint::from_rates(vec![vec![0.0; m]; k], w);
    }
    let cost_tol = 1e-9 * scale;

    let source = 0;
    let sink = k + m + 1;
    let arm_node = |i: usize| 1 + i;
    let ctx_node = |j: usize| 1 + k + j;
    let n = k + m + 2;

    let mut net = Network::new(n);
    for i in 0..k {
        net.add(source, arm_node(i), 1.0 / inst.delay(i) as f64, 0.0);
    }
    // middle arcs: index 2 * (k + i * m + j)
    for (i, row) in w.iter().enumerate() {
        for (j, &wij) in row.iter().enumerate() {
            net.add(arm_node(i), ctx_node(j), f64::INFINITY, -wij);
        }
    }
    for (j, &f) in inst.context_probs().iter().enumerate() {
        net.add(ctx_node(j), sink, f, 0.0);
    }

    let max_rounds = 4 * (k * m + k + m + 2) * n;
    for _ in 0..max_rounds {
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &a in &net.adj[u] {
                    let arc = net.arcs[a];
                    if arc.cap <= ZERO_TOL {
                        continue;
                    }
                    let nd = dist[u] + arc.cost;
                    if nd < dist[arc.to] - 1e-15 * scale {
                        dist[arc.to] = nd;
                        pred[arc.to] = Some(a);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] >= -cost_tol {
            break;
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != source {
            let a = pred[v].expect("predecessor on shortest path");
            path.push(a);
            v = net.arcs[a ^ 1].to;
        }
        let push = path.iter().map(|&a| net.arcs[a].cap).fold(f64::INFINITY, f64::min);
        for &a in &path {
            let arc = &mut net.arcs[a];
            if arc.cap.is_finite() {
                arc.cap -= push;
                if arc.cap < ZERO_TOL {
                    arc.cap = 0.0;
                }
            }
            net.arcs[a ^ 1].cap += push;
        }
    }

    let mut z = vec![vec![0.0; m]; k];
    for (i, row) in z.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let a = 2 * (k + i * m + j);
            *v = net.arcs[a ^ 1].cap;
        }
    }
    to_basic(inst, w, &mut z, cost_tol);
    ExtremePoint::from_rates(z, w)
}

/// Node ids for the crossover graph.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Node {
    Source,
    Sink,
    Arm(usize),
    Ctx(usize),
}

/// A free arc of the flow network, with its orientation `from -> to`.
#[derive(Clone, Copy, Debug)]
enum FreeArc {
    SourceArm(usize),
    ArmCtx(usize, usize),
    CtxSink(usize),
    SinkSource,
}

impl FreeArc {
    fn ends(self) -> (Node, Node) {
        match self {
            FreeArc::SourceArm(i) => (Node::Source, Node::Arm(i)),
            FreeArc::ArmCtx(i, j) => (Node::Arm(i), Node::Ctx(j)),
            FreeArc::CtxSink(j) => (Node::Ctx(j), Node::Sink),
            FreeArc::SinkSource => (Node::Sink, Node::Source),
        }
    }
}

/// Cancels cycles of strictly-interior arcs until they form a forest, which
/// makes `z` a vertex without lowering the objective (beyond `cost_tol`).
fn to_basic(inst: &Instance, w: &[Vec<f64>], z: &mut [Vec<f64>], cost_tol: f64) {
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let idx = |node: Node| match node {
        Node::Source => 0,
        Node::Sink => 1,
        Node::Arm(i) => 2 + i,
        Node::Ctx(j) => 2 + k + j,
    };
    let n = k + m + 2;

    for _ in 0..(k * m + k + m + 2) * 4 {
        let row: Vec<f64> = (0..k).map(|i| z[i].iter().sum()).collect();
        let col: Vec<f64> = (0..m).map(|j| (0..k).map(|i| z[i][j]).sum()).collect();
        let cap_row = |i: usize| 1.0 / inst.delay(i) as f64;
        let total: f64 = row.iter().sum();

        let mut free = Vec::new();
        for i in 0..k {
            if row[i] > ZERO_TOL && row[i] < cap_row(i) - ZERO_TOL {
                free.push(FreeArc::SourceArm(i));
            }
        }
        for i in 0..k {
            for j in 0..m {
                if z[i][j] > ZERO_TOL {
                    free.push(FreeArc::ArmCtx(i, j));
                }
            }
        }
        for j in 0..m {
            if col[j] > ZERO_TOL && col[j] < inst.context_probs()[j] - ZERO_TOL {
                free.push(FreeArc::CtxSink(j));
            }
        }
        if total > ZERO_TOL {
            free.push(FreeArc::SinkSource);
        }

        // Union-find until an arc closes a cycle.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let nx = p[c];
                p[c] = r;
                c = nx;
            }
            r
        }
        let mut forest: Vec<FreeArc> = Vec::new();
        let mut closing = None;
        for &arc in &free {
            let (a, b) = arc.ends();
            let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
            if ra == rb {
                closing = Some(arc);
                break;
            }
            parent[ra] = rb;
            forest.push(arc);
        }
        let Some(closing) = closing else {
            return;
        };

        // Path in the forest from the closing arc's head back to its tail.
        let (tail, head) = closing.ends();
        let path = forest_path(&forest, head, tail, n, idx).expect("cycle endpoints are connected");
        // Cycle traversal: tail -> head along `closing`, then head -> ... -> tail.
        let mut cycle: Vec<(FreeArc, bool)> = vec![(closing, true)];
        cycle.extend(path);

        // Net cost of pushing one unit in traversal direction (costs are -w on arm-context arcs).
        let unit_cost: f64 = cycle
            .iter()
            .map(|&(arc, fwd)| match arc {
                FreeArc::ArmCtx(i, j) => {
                    let c = -w[i][j];
                    if fwd {
                        c
                    } else {
                        -c
                    }
                }
                _ => 0.0,
            })
            .sum();
        let direction = unit_cost <= cost_tol;
        let mut delta = f64::INFINITY;
        for &(arc, fwd) in &cycle {
            let increase = fwd == direction;
            let room = match arc {
                FreeArc::SourceArm(i) => if increase { cap_row(i) - row[i] } else { row[i] },
                FreeArc::ArmCtx(i, j) => if increase { f64::INFINITY } else { z[i][j] },
                FreeArc::CtxSink(j) => if increase { inst.context_probs()[j] - col[j] } else { col[j] },
                FreeArc::SinkSource => if increase { f64::INFINITY } else { total },
            };
            delta = delta.min(room);
        }
        debug_assert!(delta.is_finite());
        for &(arc, fwd) in &cycle {
            if let FreeArc::ArmCtx(i, j) = arc {
                if fwd == direction {
                    z[i][j] += delta;
                } else {
                    z[i][j] -= delta;
                    if z[i][j] < ZERO_TOL {
                        z[i][j] = 0.0;
                    }
                }
            }
        }
        snap_to_caps(inst, z);
    }
}

/// Removes round-off that leaves a row or column a hair above or below its cap.
fn snap_to_caps(inst: &Instance, z: &mut [Vec<f64>]) {
    let k = inst.num_arms();
    let m = inst.num_contexts();
    for i in 0..k {
        let cap = 1.0 / inst.delay(i) as f64;
        let s: f64 = z[i].iter().sum();
        if s > cap && s - cap < 1e-12 {
            if let Some(v) = z[i].iter_mut().filter(|v| **v > 0.0).last() {
                *v -= s - cap;
            }
        }
    }
    for j in 0..m {
        let cap = inst.context_probs()[j];
        let s: f64 = (0..k).map(|i| z[i][j]).sum();
        if s > cap && s - cap < 1e-12 {
            if let Some(i) = (0..k).rev().find(|&i| z[i][j] > 0.0) {
                z[i][j] -= s - cap;
            }
        }
    }
}

/// Arcs on the unique forest path from `from` to `to`, with `true` when the
/// path traverses an arc along its orientation.
fn forest_path(
    forest: &[FreeArc],
    from: Node,
    to: Node,
    n: usize,
    idx: impl Fn(Node) -> usize,
) -> Option<Vec<(FreeArc, bool)>> {
    let mut adj: Vec<Vec<(usize, FreeArc, bool, Node)>> = vec![Vec::new(); n];
    for &arc in forest {
        let (a, b) = arc.ends();
        adj[idx(a)].push((idx(b), arc, true, b));
        adj[idx(b)].push((idx(a), arc, false, a));
    }
    let mut prev: Vec<Option<(usize, FreeArc, bool)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[idx(from)] = true;
    queue.push_back(idx(from));
    while let Some(u) = queue.pop_front() {
        if u == idx(to) {
            break;
        }
        for &(v, arc, fwd, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, arc, fwd));
                queue.push_back(v);
            }
        }
    }
    if !seen[idx(to)] {
        return None;
    }
    let mut out = Vec::new();
    let mut v = idx(to);
    while v != idx(from) {
        let (u, arc, fwd) = prev[v]?;
        out.push((arc, fwd));
        v = u;
    }
    out.reverse();
    Some(out)
}

// ---------------------------------------------------------------------------
// Vertex enumeration and gaps
// ---------------------------------------------------------------------------

/// Lists every vertex of the feasible polytope exactly once.
///
/// A vertex's support is a forest in the arm-context bipartite graph in which
/// every tree has at most one non-tight node. The enumeration walks all
/// supports, picks the (at most one) slack node of each tree, solves the tree
/// by peeling leaves and keeps strictly positive, feasible solutions.
pub fn enumerate_extreme_points(inst: &Instance) -> Result<Vec<ExtremePoint>> {
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let cells = k * m;
    if cells > ENUMERATION_LIMIT {
        return Err(CbbError::TooLarge {
            what: "vertex enumeration (k * m)",
            size: cells as f64,
            limit: ENUMERATION_LIMIT as f64,
        });
    }
    let zeros = vec![vec![0.0; m]; k];
    let unit = vec![vec![1.0; m]; k];
    let cap = |node: usize| -> f64 {
        if node < k {
            1.0 / inst.delay(node) as f64
        } else {
            inst.context_probs()[node - k]
        }
    };

    let mut out: Vec<ExtremePoint> = vec![ExtremePoint::from_rates(zeros.clone(), &unit)];
    for mask in 1u32..(1u32 << cells) {
        let edges: Vec<(usize, usize)> =
            (0..cells).filter(|b| mask & (1 << b) != 0).map(|b| (b / m, k + b % m)).collect();
        let Some(components) = forest_components(&edges, k + m) else {
            continue;
        };
        // Mixed-radix walk over the choice of slack node per tree.
        let mut choice = vec![0usize; components.len()];
        loop {
            if let Some(z) = solve_forest(&edges, &components, &choice, k, m, &cap) {
                let p = ExtremePoint::from_rates(z, &unit);
                if p.support.len() == edges.len() && p.is_feasible(inst) && !out.iter().any(|q| q.approx_eq(&p)) {
                    out.push(p);
                }
            }
            let mut c = 0;
            while c < choice.len() {
                choice[c] += 1;
                if choice[c] < components[c].len() {
                    break;
                }
                choice[c] = 0;
                c += 1;
            }
            if c == choice.len() {
                break;
            }
        }
    }
    // `value` currently holds the unit-weight value; report the true-mean value.
    for p in &mut out {
        p.value = p.value_under(inst.means());
    }
    Ok(out)
}

/// Node lists of the trees spanned by `edges`, or `None` if they contain a cycle.
fn forest_components(edges: &[(usize, usize)], n: usize) -> Option<Vec<Vec<usize>>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut touched = vec![false; n];
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
        touched[a] = true;
        touched[b] = true;
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for v in 0..n {
        if !touched[v] {
            continue;
        }
        let r = find(&mut parent, v);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(v),
            None => groups.push((r, vec![v])),
        }
    }
    Some(groups.into_iter().map(|(_, g)| g).collect())
}

/// Rates on a forest support with every node tight except each tree's chosen
/// slack node. `None` if some rate is not strictly positive or the slack node
/// ends up over capacity.
fn solve_forest(
    edges: &[(usize, usize)],
    components: &[Vec<usize>],
    choice: &[usize],
    k: usize,
    m: usize,
    cap: &impl Fn(usize) -> f64,
) -> Option<Vec<Vec<f64>>> {
    let n = k + m;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut flow = vec![0.0; edges.len()];
    for (comp, &c) in components.iter().zip(choice) {
        let root = comp[c];
        // DFS order from the root; process in reverse so children precede parents.
        let mut order = Vec::with_capacity(comp.len());
        let mut parent_edge: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut visited = vec![false; n];
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &(v, e) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent_edge[v] = Some((u, e));
                    stack.push(v);
                }
            }
        }
        let mut used = vec![0.0; n];
        for &v in order.iter().rev() {
            if v == root {
                if used[v] > cap(v) + FEAS_TOL {
                    return None;
                }
                continue;
            }
            let (p, e) = parent_edge[v].expect("non-root has a parent");
            let x = cap(v) - used[v];
            if x <= ZERO_TOL {
                return None;
            }
            flow[e] = x;
            used[v] += x;
            used[p] += x;
        }
    }
    let mut z = vec![vec![0.0; m]; k];
    for (e, &(a, b)) in edges.iter().enumerate() {
        z[a][b - k] = flow[e];
    }
    Some(z)
}

/// Suboptimality gaps of every vertex with respect to the true means.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// Every vertex with its gap `value(Z*) - value(Z)`.
    pub delta_by_vertex: Vec<(ExtremePoint, f64)>,
    /// Largest gap over all vertices.
    pub delta_max: f64,
    /// Smallest gap over suboptimal vertices using pair `(i, j)`; infinite if none.
    pub delta_min: Vec<Vec<f64>>,
    pub optimum: f64,
}

pub fn compute_gaps(inst: &Instance) -> Result<GapReport> {
    let vertices = enumerate_extreme_points(inst)?;
    let optimum = vertices.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let mut delta_min = vec![vec![f64::INFINITY; m]; k];
    let mut delta_max = 0.0f64;
    let mut delta_by_vertex = Vec::with_capacity(vertices.len());
    for p in vertices {
        let gap = (optimum - p.value).max(0.0);
        delta_max = delta_max.max(gap);
        if gap > FEAS_TOL {
            for &(i, j) in &p.support {
                delta_min[i][j] = delta_min[i][j].min(gap);
            }
        }
        delta_by_vertex.push((p, gap));
    }
    Ok(GapReport { delta_by_vertex, delta_max, delta_min, optimum })
}

/// The triggering-probability group `l >= 1` with `2^-l < z <= 2^(1-l)`.
pub fn tp_group_index(z: f64) -> Result<u32> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(CbbError::Domain(format!("rate {z} is outside (0, 1]")));
    }
    let mut upper = 1.0f64;
    for l in 1..=1100u32 {
        let lower = upper * 0.5;
        if lower < z && z <= upper {
            return Ok(l);
        }
        upper = lower;
    }
    Err(CbbError::Domain(format!("rate {z} is below every group")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{named_instance, RewardKind};

    fn inst(delays: Vec<u64>, f: Vec<f64>, mu: Vec<Vec<f64>>) -> Instance {
        Instance::new(delays, f, mu, RewardKind::Bernoulli).unwrap()
    }

    #[test]
    fn trivial_lp() {
        let i = inst(vec![1], vec![1.0], vec![vec![0.5]]);
        let p = solve_lp(&i, &LpObjective::means(&i));
        assert_eq!(p.z(), &[vec![1.0]]);
        assert!((p.value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gap_instance_optimum_is_the_diagonal_matching() {
        let i = named_instance("gap_instance(3, 0.9)").unwrap();
        let p = solve_lp(&i, &LpObjective::means(&i));
        assert!((p.value() - 0.9).abs() < 1e-9);
        assert_eq!(p.support(), &[(0, 0), (1, 1), (2, 2)]);
        for a in 0..3 {
            assert!((p.rate(a, a) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_objective_gives_zero_vertex() {
        let i = inst(vec![2, 3], vec![0.5, 0.5], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let p = solve_lp(&i, &LpObjective::means(&i));
        assert!(p.support().is_empty());
    }

    #[test]
    fn all_ones_objective_is_basic() {
        let i = named_instance("integral(0.4)").unwrap();
        let p = solve_lp(&i, &LpObjective::ones(3, 3));
        assert!((p.value() - 1.0).abs() < 1e-9);
        assert!(p.support().len() <= 6);
        assert!(p.is_feasible(&i));
    }

    #[test]
    fn one_dimensional_polytope() {
        let i = inst(vec![2], vec![1.0], vec![vec![0.4]]);
        let v = enumerate_extreme_points(&i).unwrap();
        assert_eq!(v.len(), 2);
        // f is 1 here; the cap is 1/2.
        assert!(v.iter().any(|p| (p.rate(0, 0) - 0.5).abs() < 1e-12));
    }

    #[test]
    fn one_dimensional_polytope_context_cap() {
        // k = m = 1 needs f = 1, so emulate f = 0.3 with a second, unused context.
        let i = inst(vec![2], vec![0.3, 0.7], vec![vec![0.5, 0.0]]);
        let v = enumerate_extreme_points(&i).unwrap();
        let on_first: Vec<f64> = v.iter().filter(|p| p.rate(0, 1) == 0.0).map(|p| p.rate(0, 0)).collect();
        assert!(on_first.contains(&0.0));
        assert!(on_first.iter().any(|&x| (x - 0.3).abs() < 1e-12));
        assert_eq!(on_first.len(), 2);
    }

    #[test]
    fn gap_instance_vertices_are_zero_or_one_over_k() {
        let i = named_instance("gap_instance(2, 0.5)").unwrap();
        let v = enumerate_extreme_points(&i).unwrap();
        assert!(v.len() > 2);
        for p in &v {
            for &x in p.z().iter().flatten() {
                assert!(x == 0.0 || (x - 0.5).abs() < 1e-12, "coordinate {x}");
            }
        }
    }

    #[test]
    fn enumeration_guard() {
        let i = named_instance("gap_instance(4, 0.5)").unwrap();
        assert!(matches!(enumerate_extreme_points(&i), Err(CbbError::TooLarge { .. })));
    }

    #[test]
    fn gaps_of_gap_instance() {
        let i = named_instance("gap_instance(3, 0.9)").unwrap();
        let g = compute_gaps(&i).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 0.3 } else { 0.6 };
                assert!((g.delta_min[a][b] - want).abs() < 1e-9, "({a},{b}) = {}", g.delta_min[a][b]);
            }
        }
        assert!((g.delta_max - 0.9).abs() < 1e-9);
        assert!(g.delta_by_vertex.iter().all(|(_, d)| *d >= 0.0));
    }

    #[test]
    fn single_nonzero_vertex_gap_equals_optimum() {
        let i = inst(vec![1], vec![1.0], vec![vec![0.7]]);
        let g = compute_gaps(&i).unwrap();
        assert_eq!(g.delta_by_vertex.len(), 2);
        assert!((g.delta_max - 0.7).abs() < 1e-12);
        // the only vertex using (0, 0) is optimal, so the pair has no gap
        assert!(g.delta_min[0][0].is_infinite());
    }

    #[test]
    fn tp_groups() {
        assert_eq!(tp_group_index(1.0).unwrap(), 1);
        assert_eq!(tp_group_index(0.3).unwrap(), 2);
        assert_eq!(tp_group_index(0.5).unwrap(), 2);
        assert_eq!(tp_group_index(0.25).unwrap(), 3);
        assert_eq!(tp_group_index(0.2500001).unwrap(), 2);
        assert!(tp_group_index(0.0).is_err());
        assert!(tp_group_index(1.5).is_err());
        assert!(tp_group_index(-0.1).is_err());
    }

    #[test]
    fn extreme_point_json_shape() {
        let i = named_instance("gap_instance(2, 0.5)").unwrap();
        let p = solve_lp(&i, &LpObjective::means(&i));
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert!(v["z"].is_array());
        assert!(v["value"].is_number());
        assert_eq!(v["support"][0], serde_json::json!([0, 0]));
    }
}
