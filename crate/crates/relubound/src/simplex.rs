//! Dense two-phase simplex for small box-constrained linear programs.
//!
//! The exact-range oracle needs many tiny LPs: minimize an affine objective
//! over an axis-aligned box intersected with halfspaces (one per fixed ReLU
//! sign). Problems have a handful of variables and a few dozen rows, so a
//! dense tableau with Bland's anti-cycling rule is simpler and more
//! predictable than sparse machinery: Bland guarantees termination, and every
//! pivot element is checked against a hard tolerance so a degenerate tableau
//! surfaces as an error instead of garbage.

use thiserror::Error;

/// `minimize objective · x` subject to `row · x ≤ rhs` for every constraint
/// and `lower ≤ x ≤ upper` per coordinate. Lower bounds must be finite;
/// upper bounds may be `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Halfspace rows `(coefficients, rhs)` meaning `coefficients · x ≤ rhs`.
    pub constraints: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Outcome of a solved LP.
#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {detail}")]
    BadProblem { detail: String },
    #[error("numeric breakdown in simplex: {detail}")]
    NumericBreakdown { detail: String },
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

fn validate(p: &LpProblem) -> Result<(), LpError> {
    let n = p.objective.len();
    let bad = |detail: String| Err(LpError::BadProblem { detail });
    if n == 0 {
        return bad("no variables".to_string());
    }
    if p.lower.len() != n || p.upper.len() != n {
        return bad(format!(
            "bounds cover {}/{} variables, objective has {n}",
            p.lower.len(),
            p.upper.len()
        ));
    }
    if !p.objective.iter().all(|c| c.is_finite()) {
        return bad("objective has a non-finite coefficient".to_string());
    }
    for (i, (lo, hi)) in p.lower.iter().zip(&p.upper).enumerate() {
        if !lo.is_finite() {
            return bad(format!("variable {i} has a non-finite lower bound {lo}"));
        }
        if hi.is_nan() || *hi == f64::NEG_INFINITY {
            return bad(format!("variable {i} has an invalid upper bound {hi}"));
        }
        if lo > hi {
            return bad(format!("variable {i} has empty bounds [{lo}, {hi}]"));
        }
    }
    for (k, (row, rhs)) in p.constraints.iter().enumerate() {
        if row.len() != n {
            return bad(format!("constraint {k} has {} coefficients, expected {n}", row.len()));
        }
        if !row.iter().all(|a| a.is_finite()) || !rhs.is_finite() {
            return bad(format!("constraint {k} has a non-finite entry"));
        }
    }
    Ok(())
}

/// Dense tableau with an explicit objective row, pivoted alongside the
/// constraint rows. Column layout: structural variables, then slacks, then
/// (during phase 1) artificials; the last position of each row is the RHS.
struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        let p = self.rows[r][c];
        if p.abs() < PIVOT_TOL {
            return Err(LpError::NumericBreakdown {
                detail: format!("pivot magnitude {} below tolerance", p.abs()),
            });
        }
        let inv = 1.0 / p;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
        if !self.rows.iter().flatten().all(|v| v.is_finite()) {
            return Err(LpError::NumericBreakdown {
                detail: "non-finite tableau entry after pivot".to_string(),
            });
        }
        Ok(())
    }

    /// Install reduced costs for `cost` (length `cols`) by pricing out the
    /// current basic columns.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let f = self.obj[b];
            if f != 0.0 {
                let row = self.rows[i].clone();
                for (v, rv) in self.obj.iter_mut().zip(&row) {
                    *v -= f * rv;
                }
            }
        }
    }

    /// Bland's rule: enter the lowest-index improving column; leave by the
    /// minimum-ratio row, ties broken by the lowest basic variable index.
    fn minimize(&mut self, forbidden_from: usize) -> Result<bool, LpError> {
        let max_iter = 200 + 100 * (self.rows.len() + self.cols);
        for _ in 0..max_iter {
            let entering = (0..forbidden_from.min(self.cols))
                .find(|&j| self.obj[j] < -COST_TOL);
            let Some(c) = entering else {
                return Ok(true); // optimal
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > 0.0 {
                    let ratio = row[self.cols] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best - 1e-12
                                || (ratio < best + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some(i);
                        best = ratio;
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(false); // unbounded direction
            };
            self.pivot(r, c)?;
        }
        Err(LpError::NumericBreakdown {
            detail: "iteration limit exceeded (cycling)".to_string(),
        })
    }
}

/// Solve the LP to optimality (minimization).
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    validate(p)?;
    let n = p.objective.len();

    // Shift to s = x − lower ≥ 0 and collect every row as a · s ≤ b.
    let mut raw_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, rhs) in &p.constraints {
        let shift: f64 = row.iter().zip(&p.lower).map(|(a, l)| a * l).sum();
        raw_rows.push((row.clone(), rhs - shift));
    }
    for i in 0..n {
        if p.upper[i].is_finite() {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            raw_rows.push((row, p.upper[i] - p.lower[i]));
        }
    }

    let m = raw_rows.len();
    let mut artificials = Vec::new(); // column index of each artificial
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    // First pass to count artificials so the column layout is known up front.
    let art_count = raw_rows.iter().filter(|(_, b)| *b < 0.0).count();
    let cols = n + m + art_count;
    let mut next_art = n + m;
    for (i, (row, b)) in raw_rows.iter().enumerate() {
        let mut full = vec![0.0; cols + 1];
        let flip = if *b < 0.0 { -1.0 } else { 1.0 };
        for (j, a) in row.iter().enumerate() {
            full[j] = flip * a;
        }
        full[n + i] = flip; // slack
        full[cols] = flip * b;
        if *b < 0.0 {
            full[next_art] = 1.0;
            basis.push(next_art);
            artificials.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(full);
    }

    let mut t = Tableau { rows, obj: Vec::new(), basis, cols };

    // Phase 1: minimize the sum of artificials.
    if !artificials.is_empty() {
        let mut cost = vec![0.0; cols];
        for &a in &artificials {
            cost[a] = 1.0;
        }
        t.set_objective(&cost);
        t.minimize(cols)?;
        let infeasibility = -t.obj[t.cols];
        if infeasibility > FEAS_TOL {
            return Ok(LpSolution::Infeasible);
        }
        // Drive any artificial still basic (at level zero) out of the basis;
        // a row with no real pivot candidate is redundant and can be dropped.
        let art_start = n + m;
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                let candidate = (0..art_start).find(|&j| t.rows[r][j].abs() > PIVOT_TOL);
                match candidate {
                    Some(c) => t.pivot(r, c)?,
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        // Remove the artificial columns entirely.
        for row in t.rows.iter_mut() {
            let rhs = row[t.cols];
            row.truncate(art_start);
            row.push(rhs);
        }
        t.cols = art_start;
    }

    // Phase 2: the real objective over structural and slack columns.
    let mut cost = vec![0.0; t.cols];
    cost[..n].copy_from_slice(&p.objective);
    t.set_objective(&cost);
    if !t.minimize(t.cols)? {
        return Ok(LpSolution::Unbounded);
    }

    let mut s = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            s[b] = t.rows[i][t.cols].max(0.0);
        }
    }
    let point: Vec<f64> = s.iter().zip(&p.lower).map(|(si, l)| si + l).collect();
    let value = p
        .objective
        .iter()
        .zip(&point)
        .map(|(c, x)| c * x)
        .sum::<f64>();
    Ok(LpSolution::Optimal { value, point })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use num_bigint::BigInt;
    use rand::Rng;

    // --- Exact rational reference -------------------------------------

    #[derive(Clone, PartialEq, Debug)]
    struct Frac {
        n: BigInt,
        d: BigInt, // invariant: d > 0
    }

    fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
        let zero = BigInt::from(0);
        let mut a = a.clone();
        let mut b = b.clone();
        while b != zero {
            let r = &a % &b;
            a = std::mem::replace(&mut b, r);
        }
        if a < zero {
            -a
        } else {
            a
        }
    }

    impl Frac {
        fn int(v: i64) -> Frac {
            Frac { n: BigInt::from(v), d: BigInt::from(1) }
        }
        fn norm(mut self) -> Frac {
            let zero = BigInt::from(0);
            if self.d < zero {
                self.n = -self.n;
                self.d = -self.d;
            }
            let g = gcd(&self.n, &self.d);
            if g != zero && g != BigInt::from(1) {
                self.n = &self.n / &g;
                self.d = &self.d / &g;
            }
            self
        }
        fn add(&self, o: &Frac) -> Frac {
            Frac { n: &self.n * &o.d + &o.n * &self.d, d: &self.d * &o.d }.norm()
        }
        fn sub(&self, o: &Frac) -> Frac {
            Frac { n: &self.n * &o.d - &o.n * &self.d, d: &self.d * &o.d }.norm()
        }
        fn mul(&self, o: &Frac) -> Frac {
            Frac { n: &self.n * &o.n, d: &self.d * &o.d }.norm()
        }
        fn div(&self, o: &Frac) -> Frac {
            Frac { n: &self.n * &o.d, d: &self.d * &o.n }.norm()
        }
        fn is_neg(&self) -> bool {
            self.n < BigInt::from(0)
        }
        fn is_pos(&self) -> bool {
            self.n > BigInt::from(0)
        }
        fn lt(&self, o: &Frac) -> bool {
            // d > 0 on both sides keeps the cross-multiplication ordered.
            &self.n * &o.d < &o.n * &self.d
        }
        fn to_f64(&self) -> f64 {
            let num: f64 = self.n.to_string().parse().unwrap();
            let den: f64 = self.d.to_string().parse().unwrap();
            num / den
        }
    }

    #[derive(Debug, PartialEq)]
    enum ExactSolution {
        Optimal(Frac),
        Infeasible,
        Unbounded,
    }

    /// Two-phase simplex in exact rational arithmetic over integer data; the
    /// algorithmic skeleton matches the float solver but every comparison is
    /// exact, so its verdicts are ground truth.
    fn solve_exact(
        objective: &[i64],
        constraints: &[(Vec<i64>, i64)],
        lower: &[i64],
        upper: &[Option<i64>],
    ) -> ExactSolution {
        let n = objective.len();
        let mut raw: Vec<(Vec<Frac>, Frac)> = Vec::new();
        for (row, rhs) in constraints {
            let shift: i64 = row.iter().zip(lower).map(|(a, l)| a * l).sum();
            raw.push((
                row.iter().map(|v| Frac::int(*v)).collect(),
                Frac::int(rhs - shift),
            ));
        }
        for i in 0..n {
            if let Some(u) = upper[i] {
                let mut row = vec![Frac::int(0); n];
                row[i] = Frac::int(1);
                raw.push((row, Frac::int(u - lower[i])));
            }
        }
        let m = raw.len();
        let art_count = raw.iter().filter(|(_, b)| b.is_neg()).count();
        let cols = n + m + art_count;
        let mut rows: Vec<Vec<Frac>> = Vec::new();
        let mut basis = Vec::new();
        let mut artificials = Vec::new();
        let mut next_art = n + m;
        for (i, (row, b)) in raw.iter().enumerate() {
            let mut full = vec![Frac::int(0); cols + 1];
            let neg = b.is_neg();
            let sign = if neg { Frac::int(-1) } else { Frac::int(1) };
            for (j, a) in row.iter().enumerate() {
                full[j] = a.mul(&sign);
            }
            full[n + i] = sign.clone();
            full[cols] = b.mul(&sign);
            if neg {
                full[next_art] = Frac::int(1);
                basis.push(next_art);
                artificials.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(full);
        }

        let pivot = |rows: &mut Vec<Vec<Frac>>, obj: &mut Vec<Frac>, basis: &mut Vec<usize>, r: usize, c: usize| {
            let p = rows[r][c].clone();
            for v in rows[r].iter_mut() {
                *v = v.div(&p);
            }
            let prow = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i == r {
                    continue;
                }
                let f = row[c].clone();
                if f != Frac::int(0) {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v = v.sub(&f.mul(pv));
                    }
                }
            }
            let f = obj[c].clone();
            if f != Frac::int(0) {
                for (v, pv) in obj.iter_mut().zip(&prow) {
                    *v = v.sub(&f.mul(pv));
                }
            }
            basis[r] = c;
        };

        let set_obj = |rows: &Vec<Vec<Frac>>, basis: &Vec<usize>, cost: Vec<Frac>| -> Vec<Frac> {
            let mut obj = cost;
            obj.push(Frac::int(0));
            for (i, &b) in basis.iter().enumerate() {
                let f = obj[b].clone();
                if f != Frac::int(0) {
                    for (v, rv) in obj.iter_mut().zip(&rows[i]) {
                        *v = v.sub(&f.mul(rv));
                    }
                }
            }
            obj
        };

        let minimize = |rows: &mut Vec<Vec<Frac>>,
                        obj: &mut Vec<Frac>,
                        basis: &mut Vec<usize>,
                        limit: usize,
                        rhs_col: usize|
         -> bool {
            loop {
                let entering = (0..limit).find(|&j| obj[j].is_neg());
                let Some(c) = entering else { return true };
                let mut leave: Option<usize> = None;
                let mut best = Frac::int(0);
                for (i, row) in rows.iter().enumerate() {
                    if row[c].is_pos() {
                        let ratio = row[rhs_col].div(&row[c]);
                        let better = match leave {
                            None => true,
                            Some(l) => {
                                ratio.lt(&best)
                                    || (ratio == best && basis[i] < basis[l])
                            }
                        };
                        if better {
                            leave = Some(i);
                            best = ratio;
                        }
                    }
                }
                let Some(r) = leave else { return false };
                pivot(rows, obj, basis, r, c);
            }
        };

        let mut rhs_col = cols;
        if !artificials.is_empty() {
            let mut cost = vec![Frac::int(0); cols];
            for &a in &artificials {
                cost[a] = Frac::int(1);
            }
            let mut obj = set_obj(&rows, &basis, cost);
            minimize(&mut rows, &mut obj, &mut basis, cols, rhs_col);
            if obj[rhs_col].is_neg() {
                return ExactSolution::Infeasible;
            }
            let art_start = n + m;
            let mut r = 0;
            while r < rows.len() {
                if basis[r] >= art_start {
                    let cand = (0..art_start).find(|&j| rows[r][j] != Frac::int(0));
                    match cand {
                        Some(c) => pivot(&mut rows, &mut obj, &mut basis, r, c),
                        None => {
                            rows.remove(r);
                            basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
            for row in rows.iter_mut() {
                let rhs = row[rhs_col].clone();
                row.truncate(art_start);
                row.push(rhs);
            }
            rhs_col = art_start;
        }

        let mut cost = vec![Frac::int(0); rhs_col];
        for (j, c) in objective.iter().enumerate() {
            cost[j] = Frac::int(*c);
        }
        let mut obj = set_obj(&rows, &basis, cost);
        if !minimize(&mut rows, &mut obj, &mut basis, rhs_col, rhs_col) {
            return ExactSolution::Unbounded;
        }
        let mut s = vec![Frac::int(0); n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                s[b] = rows[i][rhs_col].clone();
            }
        }
        let mut value = Frac::int(0);
        for j in 0..n {
            let xj = s[j].add(&Frac::int(lower[j]));
            value = value.add(&xj.mul(&Frac::int(objective[j])));
        }
        ExactSolution::Optimal(value)
    }

    // --- Independent vertex-enumeration oracle -------------------------

    /// Brute-force optimum for small fully-bounded LPs: every vertex of the
    /// feasible polytope is the intersection of `n` active constraints, so
    /// enumerate all n-subsets of (box faces ∪ rows), solve, filter by
    /// feasibility, and take the minimum.
    fn vertex_optimum(p: &LpProblem) -> Option<f64> {
        let n = p.objective.len();
        let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..n {
            let mut lo_row = vec![0.0; n];
            lo_row[i] = -1.0;
            pool.push((lo_row, -p.lower[i]));
            let mut hi_row = vec![0.0; n];
            hi_row[i] = 1.0;
            pool.push((hi_row, p.upper[i]));
        }
        pool.extend(p.constraints.iter().cloned());

        let feasible = |x: &[f64]| {
            pool.iter()
                .all(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() <= b + 1e-7)
        };

        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            // Solve the n×n system with rows pool[idx].
            let mut mat: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].0.clone()).collect();
            let mut rhs: Vec<f64> = idx.iter().map(|&i| pool[i].1).collect();
            if let Some(x) = gauss_solve(&mut mat, &mut rhs) {
                if feasible(&x) {
                    let v = p.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum::<f64>();
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            // Next combination in lexicographic order.
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] + (n - k) < pool.len() {
                    idx[k] += 1;
                    for j in k + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn gauss_solve(mat: &mut [Vec<f64>], rhs: &mut [f64]) -> Option<Vec<f64>> {
        let n = rhs.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&a, &b| {
                mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap()
            })?;
            if mat[pivot][col].abs() < 1e-9 {
                return None;
            }
            mat.swap(col, pivot);
            rhs.swap(col, pivot);
            for r in 0..n {
                if r != col {
                    let f = mat[r][col] / mat[col][col];
                    // Rows `r` and `col` are live at once, so no iterator.
                    #[allow(clippy::needless_range_loop)]
                    for c in col..n {
                        mat[r][c] -= f * mat[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
        Some((0..n).map(|i| rhs[i] / mat[i][i]).collect())
    }

    // --- Tests ----------------------------------------------------------

    fn assert_feasible(p: &LpProblem, x: &[f64]) {
        for (i, xi) in x.iter().enumerate() {
            assert!(*xi >= p.lower[i] - 1e-7 && *xi <= p.upper[i] + 1e-7);
        }
        for (row, b) in &p.constraints {
            let lhs: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
            assert!(lhs <= b + 1e-7, "constraint violated: {lhs} > {b}");
        }
    }

    #[test]
    fn pure_box_minimum_sits_on_the_right_corner() {
        let mut rng = stream_rng(71, 0);
        for _ in 0..20 {
            let n = rng.random_range(1..=4);
            let p = LpProblem {
                objective: (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
                constraints: vec![],
                lower: (0..n).map(|_| rng.random_range(-3.0..0.0)).collect(),
                upper: (0..n).map(|_| rng.random_range(0.0..3.0)).collect(),
            };
            let want: f64 = (0..n)
                .map(|i| {
                    p.objective[i] * if p.objective[i] >= 0.0 { p.lower[i] } else { p.upper[i] }
                })
                .sum();
            match solve_lp(&p).unwrap() {
                LpSolution::Optimal { value, point } => {
                    assert!((value - want).abs() < 1e-9, "{value} vs {want}");
                    assert_feasible(&p, &point);
                }
                other => panic!("expected optimal, got {other:?}"),
            }
        }
    }

    #[test]
    fn textbook_diet() {
        // min −x−y on the unit simplex slice: optimum −1 along x+y = 1.
        let p = LpProblem {
            objective: vec![-1.0, -1.0],
            constraints: vec![(vec![1.0, 1.0], 1.0)],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { value, point } => {
                assert!((value + 1.0).abs() < 1e-9);
                assert!((point[0] + point[1] - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        let p = LpProblem {
            objective: vec![1.0],
            constraints: vec![(vec![1.0], -1.0)],
            lower: vec![0.0],
            upper: vec![5.0],
        };
        assert_eq!(solve_lp(&p).unwrap(), LpSolution::Infeasible);

        // Contradictory halfspaces inside a valid box.
        let p = LpProblem {
            objective: vec![1.0, 0.0],
            constraints: vec![(vec![-1.0, 0.0], -2.0), (vec![1.0, 0.0], 1.0)],
            lower: vec![0.0, 0.0],
            upper: vec![5.0, 5.0],
        };
        assert_eq!(solve_lp(&p).unwrap(), LpSolution::Infeasible);

        // An identically-zero row with a negative right-hand side.
        let p = LpProblem {
            objective: vec![1.0],
            constraints: vec![(vec![0.0], -1.0)],
            lower: vec![0.0],
            upper: vec![1.0],
        };
        assert_eq!(solve_lp(&p).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let p = LpProblem {
            objective: vec![-1.0, 0.0],
            constraints: vec![(vec![0.0, 1.0], 3.0)],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        assert_eq!(solve_lp(&p).unwrap(), LpSolution::Unbounded);
    }

    #[test]
    fn bland_terminates_on_the_classic_cycling_program() {
        // The standard degenerate example that cycles under Dantzig's rule;
        // Bland's rule must reach the optimum −1/20.
        let p = LpProblem {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            constraints: vec![
                (vec![0.25, -60.0, -0.04, 9.0], 0.0),
                (vec![0.5, -90.0, -0.02, 3.0], 0.0),
                (vec![0.0, 0.0, 1.0, 0.0], 1.0),
            ],
            lower: vec![0.0; 4],
            upper: vec![f64::INFINITY; 4],
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { value, point } => {
                assert!((value + 0.05).abs() < 1e-9, "value {value}");
                assert_feasible(&p, &point);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_lower_bounds_are_shifted_correctly() {
        // min x on [−3, 7] with x ≥ −1: the lower-bound row activates phase 1.
        let p = LpProblem {
            objective: vec![1.0],
            constraints: vec![(vec![-1.0], 1.0)],
            lower: vec![-3.0],
            upper: vec![7.0],
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { value, point } => {
                assert!((value + 1.0).abs() < 1e-9);
                assert!((point[0] + 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_encoded_as_opposing_halfspaces() {
        // x + y = 1 exactly; min x − y → (0, 1) → −1.
        let p = LpProblem {
            objective: vec![1.0, -1.0],
            constraints: vec![(vec![1.0, 1.0], 1.0), (vec![-1.0, -1.0], -1.0)],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { value, point } => {
                assert!((value + 1.0).abs() < 1e-9);
                assert!((point[0] + point[1] - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_harmless() {
        let row = (vec![1.0, 1.0], 1.5);
        let p = LpProblem {
            objective: vec![-1.0, -2.0],
            constraints: vec![row.clone(), row.clone(), row, (vec![0.0, 0.0], 0.0)],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { value, point } => {
                // Best: y = 1, x = 0.5 → −2.5.
                assert!((value + 2.5).abs() < 1e-9, "value {value}");
                assert_feasible(&p, &point);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_programs() {
        let base = LpProblem {
            objective: vec![1.0],
            constraints: vec![],
            lower: vec![0.0],
            upper: vec![1.0],
        };
        let mut p = base.clone();
        p.lower = vec![2.0];
        assert!(matches!(solve_lp(&p), Err(LpError::BadProblem { .. })));
        let mut p = base.clone();
        p.objective = vec![f64::NAN];
        assert!(matches!(solve_lp(&p), Err(LpError::BadProblem { .. })));
        let mut p = base.clone();
        p.constraints = vec![(vec![1.0, 2.0], 0.0)];
        assert!(matches!(solve_lp(&p), Err(LpError::BadProblem { .. })));
        let mut p = base;
        p.lower = vec![f64::NEG_INFINITY];
        assert!(matches!(solve_lp(&p), Err(LpError::BadProblem { .. })));
    }

    /// Random integer LPs, cross-checked against the exact rational solver
    /// and (in low dimension) the vertex-enumeration oracle.
    #[test]
    fn agrees_with_exact_and_vertex_oracles() {
        let mut rng = stream_rng(73, 0);
        let mut optimal_seen = 0;
        let mut infeasible_seen = 0;
        for _ in 0..150 {
            let n = rng.random_range(1..=4usize);
            let rows = rng.random_range(0..=4usize);
            let objective: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
            let lower: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=0)).collect();
            let upper: Vec<i64> = lower.iter().map(|l| l + rng.random_range(1..=5)).collect();
            let constraints: Vec<(Vec<i64>, i64)> = (0..rows)
                .map(|_| {
                    (
                        (0..n).map(|_| rng.random_range(-4..=4)).collect(),
                        rng.random_range(-6..=6),
                    )
                })
                .collect();

            let p = LpProblem {
                objective: objective.iter().map(|v| *v as f64).collect(),
                constraints: constraints
                    .iter()
                    .map(|(r, b)| (r.iter().map(|v| *v as f64).collect(), *b as f64))
                    .collect(),
                lower: lower.iter().map(|v| *v as f64).collect(),
                upper: upper.iter().map(|v| *v as f64).collect(),
            };
            let got = solve_lp(&p).unwrap();
            let want = solve_exact(
                &objective,
                &constraints,
                &lower,
                &upper.iter().map(|u| Some(*u)).collect::<Vec<_>>(),
            );
            match (got, want) {
                (LpSolution::Optimal { value, point }, ExactSolution::Optimal(exact)) => {
                    optimal_seen += 1;
                    let exact = exact.to_f64();
                    assert!(
                        (value - exact).abs() < 1e-8,
                        "float {value} vs exact {exact}"
                    );
                    assert_feasible(&p, &point);
                    if n <= 3 {
                        let vertex = vertex_optimum(&p).expect("feasible LP has a vertex");
                        assert!(
                            (value - vertex).abs() < 1e-7,
                            "float {value} vs vertex {vertex}"
                        );
                    }
                }
                (LpSolution::Infeasible, ExactSolution::Infeasible) => infeasible_seen += 1,
                (LpSolution::Unbounded, ExactSolution::Unbounded) => {
                    unreachable!("finite boxes cannot be unbounded")
                }
                (g, w) => panic!("status mismatch: float {g:?}, exact {w:?}"),
            }
        }
        // The generator must exercise both outcomes to mean anything.
        assert!(optimal_seen >= 50, "only {optimal_seen} optimal instances");
        assert!(infeasible_seen >= 10, "only {infeasible_seen} infeasible instances");
    }
}
