//! Bottleneck assignment by threshold search with capacitated Hopcroft–Karp.

const FREE: u32 = u32::MAX;
const UNREACHED: u32 = u32::MAX;

/// A bipartite cost structure that can enumerate cheap edges.
pub(crate) trait ThresholdGraph: Sync {
    fn left_len(&self) -> usize;
    fn right_len(&self) -> usize;
    /// For every left vertex, the right vertices `j` with `cost(i, j) <= t`,
    /// ascending, with their costs.
    fn adjacency(&self, t: f64) -> Vec<Vec<(u32, f64)>>;
    /// A threshold at which the start of the search should be attempted.
    fn initial_guess(&self) -> f64;
}

/// Explicit cost matrix, row-major `left × right`.
pub(crate) struct DenseCosts {
    pub left: usize,
    pub right: usize,
    pub costs: Vec<f64>,
}

impl ThresholdGraph for DenseCosts {
    fn left_len(&self) -> usize {
        self.left
    }
    fn right_len(&self) -> usize {
        self.right
    }
    fn adjacency(&self, t: f64) -> Vec<Vec<(u32, f64)>> {
        self.costs
            .chunks_exact(self.right)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c <= t)
                    .map(|(j, &c)| (j as u32, c))
                    .collect()
            })
            .collect()
    }
    fn initial_guess(&self) -> f64 {
        // the largest row minimum is a lower bound on the answer
        (0..self.left)
            .map(|i| {
                self.costs[i * self.right..(i + 1) * self.right]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Left-to-right assignment where every right vertex takes exactly
/// `capacity` left vertices. Equivalent to matching against `capacity`
/// copies of each right vertex.
#[derive(Debug, Clone)]
pub(crate) struct Assignment {
    pub capacity: usize,
    pub left_to_right: Vec<u32>,
    pub members: Vec<Vec<u32>>,
}

impl Assignment {
    fn empty(left: usize, right: usize, capacity: usize) -> Self {
        Assignment {
            capacity,
            left_to_right: vec![FREE; left],
            members: vec![Vec::with_capacity(capacity); right],
        }
    }

    fn matched(&self) -> usize {
        self.left_to_right.iter().filter(|&&r| r != FREE).count()
    }

    fn assign(&mut self, i: usize, j: u32) {
        self.left_to_right[i] = j;
        self.members[j as usize].push(i as u32);
    }

    fn unassign(&mut self, i: usize) {
        let j = self.left_to_right[i];
        if j != FREE {
            let list = &mut self.members[j as usize];
            let pos = list.iter().position(|&x| x as usize == i).expect("member list in sync");
            list.swap_remove(pos);
            self.left_to_right[i] = FREE;
        }
    }

    /// Drops assignments whose edge is no longer in `adj`.
    fn restrict(&mut self, adj: &[Vec<(u32, f64)>]) {
        for i in 0..self.left_to_right.len() {
            let j = self.left_to_right[i];
            if j != FREE && adj[i].binary_search_by_key(&j, |e| e.0).is_err() {
                self.unassign(i);
            }
        }
    }
}

/// Extends `start` to a maximum assignment on the threshold graph `adj`.
fn maximize(adj: &[Vec<(u32, f64)>], start: &mut Assignment) {
    let left = adj.len();
    let cap = start.capacity;
    // greedy fill
    for i in 0..left {
        if start.left_to_right[i] != FREE {
            continue;
        }
        let open = adj[i]
            .iter()
            .filter(|e| start.members[e.0 as usize].len() < cap)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some(&(j, _)) = open {
            start.assign(i, j);
        }
    }
    let mut dist = vec![UNREACHED; left];
    let mut queue = Vec::with_capacity(left);
    let mut stack: Vec<(u32, u32, u32)> = Vec::new();
    loop {
        // layered BFS from free left vertices
        queue.clear();
        for i in 0..left {
            if start.left_to_right[i] == FREE {
                dist[i] = 0;
                queue.push(i as u32);
            } else {
                dist[i] = UNREACHED;
            }
        }
        let mut limit = UNREACHED;
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head] as usize;
            head += 1;
            if dist[i] >= limit {
                continue;
            }
            for &(j, _) in &adj[i] {
                let members = &start.members[j as usize];
                if members.len() < cap {
                    limit = limit.min(dist[i] + 1);
                } else {
                    for &i2 in members {
                        if dist[i2 as usize] == UNREACHED {
                            dist[i2 as usize] = dist[i] + 1;
                            queue.push(i2);
                        }
                    }
                }
            }
        }
        if limit == UNREACHED {
            return;
        }
        // layered DFS with an explicit stack of (left, adjacency pos, member pos)
        let mut progress = false;
        for root in 0..left {
            if start.left_to_right[root] != FREE || dist[root] != 0 {
                continue;
            }
            stack.clear();
            stack.push((root as u32, 0, 0));
            let mut terminal = None;
            while let Some(&mut (i, ref mut a, ref mut b)) = stack.last_mut() {
                let i = i as usize;
                let layer = dist[i];
                let row = &adj[i];
                let mut descend = None;
                while (*a as usize) < row.len() {
                    let j = row[*a as usize].0;
                    let members = &start.members[j as usize];
                    if layer + 1 == limit {
                        if members.len() < cap {
                            terminal = Some(j);
                            break;
                        }
                        *a += 1;
                        continue;
                    }
                    if (*b as usize) < members.len() {
                        let i2 = members[*b as usize];
                        *b += 1;
                        if dist[i2 as usize] == layer + 1 {
                            descend = Some(i2);
                            break;
                        }
                        continue;
                    }
                    *a += 1;
                    *b = 0;
                }
                if terminal.is_some() {
                    break;
                }
                match descend {
                    Some(i2) => stack.push((i2, 0, 0)),
                    None => {
                        dist[i] = UNREACHED;
                        stack.pop();
                    }
                }
            }
            let Some(end) = terminal else { continue };
            progress = true;
            // Frame f's left vertex takes the right vertex it was scanning;
            // the deepest takes the free terminal. Member positions were
            // advanced past the child, so read the right vertex from `a`.
            let targets: Vec<u32> = stack
                .iter()
                .enumerate()
                .map(|(f, &(i, a, _))| {
                    if f + 1 == stack.len() {
                        end
                    } else {
                        adj[i as usize][a as usize].0
                    }
                })
                .collect();
            for (f, &(i, _, _)) in stack.iter().enumerate().rev() {
                let i = i as usize;
                start.unassign(i);
                start.assign(i, targets[f]);
                dist[i] = UNREACHED;
            }
        }
        if !progress {
            return;
        }
    }
}

/// Outcome of a bottleneck search.
pub(crate) struct Bottleneck {
    pub cost: f64,
    pub assignment: Assignment,
}

fn feasible_on(adj: &[Vec<(u32, f64)>], seed: &Assignment) -> (bool, Assignment) {
    feasible_from(adj, &[seed])
}

/// Restricts each seed to `adj`, keeps the one with most matched pairs and
/// extends it to a maximum assignment.
fn feasible_from(adj: &[Vec<(u32, f64)>], seeds: &[&Assignment]) -> (bool, Assignment) {
    let mut a = seeds
        .iter()
        .map(|s| {
            let mut a = (*s).clone();
            a.restrict(adj);
            a
        })
        .max_by_key(Assignment::matched)
        .expect("at least one seed");
    maximize(adj, &mut a);
    (a.matched() == adj.len(), a)
}

fn feasible_at<G: ThresholdGraph>(g: &G, t: f64, seed: &Assignment) -> (bool, Assignment) {
    feasible_on(&g.adjacency(t), seed)
}

fn filtered(full: &[Vec<(u32, f64)>], t: f64) -> Vec<Vec<(u32, f64)>> {
    full.iter()
        .map(|row| row.iter().filter(|e| e.1 <= t).copied().collect())
        .collect()
}

/// Minimal threshold admitting a complete capacitated assignment.
///
/// Bracket the answer by geometric growth from the graph's guess, then
/// binary-search the sorted distinct edge costs inside the bracket. Every
/// probe is warm-started from the latest infeasible assignment, which stays
/// valid at any larger threshold.
pub(crate) fn bottleneck<G: ThresholdGraph>(g: &G, capacity: usize) -> Bottleneck {
    let left = g.left_len();
    let right = g.right_len();
    assert_eq!(left, right * capacity, "sizes checked by callers");
    let empty = Assignment::empty(left, right, capacity);
    let (ok, a0) = feasible_at(g, 0.0, &empty);
    if ok {
        return Bottleneck {
            cost: 0.0,
            assignment: a0,
        };
    }
    let mut lo = 0.0;
    let mut lo_assign = a0;
    let mut hi = g.initial_guess().max(f64::MIN_POSITIVE);
    let (full, mut best) = loop {
        let adj = g.adjacency(hi);
        let (ok, a) = feasible_on(&adj, &lo_assign);
        if ok {
            break (adj, a);
        }
        lo = hi;
        lo_assign = a;
        hi *= 1.5;
    };
    let mut candidates: Vec<f64> = full.iter().flatten().map(|e| e.1).filter(|&c| c > lo).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    // the answer is a realized cost in (lo, hi]; the largest is feasible
    let mut best_cost = *candidates.last().expect("feasible threshold has edges");
    let (mut a, mut b) = (0usize, candidates.len() - 1);
    while a < b {
        let mid = (a + b) / 2;
        // restricting the feasible assignment usually loses only a few pairs
        let (ok, asg) = feasible_from(&filtered(&full, candidates[mid]), &[&best, &lo_assign]);
        if ok {
            best = asg;
            best_cost = candidates[mid];
            b = mid;
        } else {
            lo_assign = asg;
            a = mid + 1;
        }
    }
    Bottleneck {
        cost: best_cost,
        assignment: best,
    }
}

/// Whether a complete assignment exists using only costs `<= t`.
pub(crate) fn is_feasible<G: ThresholdGraph>(g: &G, capacity: usize, t: f64) -> bool {
    let empty = Assignment::empty(g.left_len(), g.right_len(), capacity);
    feasible_at(g, t, &empty).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacitated_matching_fills_all() {
        // 4 left, 2 right with capacity 2; costs favor right 0
        let g = DenseCosts {
            left: 4,
            right: 2,
            costs: vec![0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6],
        };
        let b = bottleneck(&g, 2);
        assert_eq!(b.cost, 0.7);
        assert!(b.assignment.members.iter().all(|m| m.len() == 2));
    }

    #[test]
    fn long_augmenting_chain() {
        // staircase forcing every vertex to shift by one
        let n = 50;
        let mut costs = vec![10.0; n * n];
        for i in 0..n {
            costs[i * n + i] = 1.0;
            if i + 1 < n {
                costs[i * n + i + 1] = 0.5;
            }
        }
        let g = DenseCosts { left: n, right: n, costs };
        let b = bottleneck(&g, 1);
        assert_eq!(b.cost, 1.0);
    }
}
