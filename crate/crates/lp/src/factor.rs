//! Basis factorization for the bounded simplex.
//!
//! The constraint system is `A x - r = 0` with one logical `r_i` per row, so
//! logical basis columns are `-e_i`. Rows whose logical is basic drop out of
//! the factorization; only the kernel `A[R', S]` (rows without a basic
//! logical, structural basic columns) is factored, densely, with partial
//! pivoting. Pivots after a refactorization are kept as product-form etas.

pub(crate) const NONE: usize = usize::MAX;

const SINGULAR_TOL: f64 = 1e-11;

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// Basis positions whose structural columns turned out dependent, and rows
/// left uncovered by the factorization. Equal lengths.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

pub(crate) struct Factor {
    m: usize,
    k: usize,
    krow: Vec<usize>,
    kcol_var: Vec<usize>,
    kcol_pos: Vec<usize>,
    row_k: Vec<usize>,
    logical_pos: Vec<usize>,
    /// Strictly lower part of `L` by row, as (column, value).
    l_rows: Vec<Vec<(usize, f64)>>,
    /// Strictly upper part of `U` by row.
    u_rows: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    etas: Vec<Eta>,
}

impl Factor {
    pub fn empty() -> Self {
        Factor {
            m: 0,
            k: 0,
            krow: Vec::new(),
            kcol_var: Vec::new(),
            kcol_pos: Vec::new(),
            row_k: Vec::new(),
            logical_pos: Vec::new(),
            l_rows: Vec::new(),
            u_rows: Vec::new(),
            u_diag: Vec::new(),
            prow: Vec::new(),
            pcol: Vec::new(),
            etas: Vec::new(),
        }
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Factor the basis given by `head` (basis position -> variable index;
    /// indices `>= cols.len()` are logicals `n + row`).
    pub fn factorize(head: &[usize], cols: &[Vec<(usize, f64)>]) -> Result<Factor, Singular> {
        let m = head.len();
        let n = cols.len();
        let mut logical_pos = vec![NONE; m];
        let mut kcol_var = Vec::new();
        let mut kcol_pos = Vec::new();
        for (p, &j) in head.iter().enumerate() {
            if j >= n {
                logical_pos[j - n] = p;
            } else {
                kcol_var.push(j);
                kcol_pos.push(p);
            }
        }
        let mut row_k = vec![NONE; m];
        let mut krow = Vec::new();
        for i in 0..m {
            if logical_pos[i] == NONE {
                row_k[i] = krow.len();
                krow.push(i);
            }
        }
        let k = krow.len();
        debug_assert_eq!(k, kcol_var.len());

        let mut lu = vec![0.0; k * k];
        for (t, &j) in kcol_var.iter().enumerate() {
            for &(i, a) in &cols[j] {
                let r = row_k[i];
                if r != NONE {
                    lu[r * k + t] += a;
                }
            }
        }

        let mut prow: Vec<usize> = (0..k).collect();
        let mut pcol: Vec<usize> = (0..k).collect();
        for step in 0..k {
            // Partial pivoting in the current column; fall back to a column
            // search when the column is numerically empty.
            let mut best = (step, step, 0.0f64);
            for i in step..k {
                let v = lu[i * k + step].abs();
                if v > best.2 {
                    best = (i, step, v);
                }
            }
            if best.2 < SINGULAR_TOL {
                for j in step + 1..k {
                    for i in step..k {
                        let v = lu[i * k + j].abs();
                        if v > best.2 {
                            best = (i, j, v);
                        }
                    }
                    if best.2 >= 1e-3 {
                        break;
                    }
                }
            }
            if best.2 < SINGULAR_TOL {
                return Err(Singular {
                    positions: pcol[step..].iter().map(|&t| kcol_pos[t]).collect(),
                    rows: prow[step..].iter().map(|&t| krow[t]).collect(),
                });
            }
            let (pi, pj, _) = best;
            if pi != step {
                for c in 0..k {
                    lu.swap(step * k + c, pi * k + c);
                }
                prow.swap(step, pi);
            }
            if pj != step {
                for r in 0..k {
                    lu.swap(r * k + step, r * k + pj);
                }
                pcol.swap(step, pj);
            }
            let pivot = lu[step * k + step];
            let (upper, lower) = lu.split_at_mut((step + 1) * k);
            let prow_slice = &upper[step * k..step * k + k];
            for i in 0..k - step - 1 {
                let row = &mut lower[i * k..i * k + k];
                let l = row[step];
                if l == 0.0 {
                    continue;
                }
                let l = l / pivot;
                row[step] = l;
                for c in step + 1..k {
                    let u = prow_slice[c];
                    if u != 0.0 {
                        row[c] -= l * u;
                    }
                }
            }
        }

        let mut l_rows = vec![Vec::new(); k];
        let mut u_rows = vec![Vec::new(); k];
        let mut u_diag = vec![0.0; k];
        for i in 0..k {
            let row = &lu[i * k..(i + 1) * k];
            l_rows[i] = (0..i).filter(|&c| row[c] != 0.0).map(|c| (c, row[c])).collect();
            u_rows[i] = (i + 1..k).filter(|&c| row[c] != 0.0).map(|c| (c, row[c])).collect();
            u_diag[i] = row[i];
        }

        Ok(Factor {
            m,
            k,
            krow,
            kcol_var,
            kcol_pos,
            row_k,
            logical_pos,
            l_rows,
            u_rows,
            u_diag,
            prow,
            pcol,
            etas: Vec::new(),
        })
    }

    fn kernel_solve(&self, b: &mut [f64]) {
        // b is indexed by kernel row on entry, by kernel column on exit.
        let k = self.k;
        let mut w: Vec<f64> = self.prow.iter().map(|&r| b[r]).collect();
        for i in 0..k {
            let mut s = w[i];
            for &(c, l) in &self.l_rows[i] {
                s -= l * w[c];
            }
            w[i] = s;
        }
        for i in (0..k).rev() {
            let mut s = w[i];
            for &(c, u) in &self.u_rows[i] {
                s -= u * w[c];
            }
            w[i] = s / self.u_diag[i];
        }
        for (j, &t) in self.pcol.iter().enumerate() {
            b[t] = w[j];
        }
    }

    fn kernel_solve_transpose(&self, c: &mut [f64]) {
        // c is indexed by kernel column on entry, by kernel row on exit.
        let k = self.k;
        let mut w: Vec<f64> = self.pcol.iter().map(|&t| c[t]).collect();
        for i in 0..k {
            let v = w[i] / self.u_diag[i];
            w[i] = v;
            if v != 0.0 {
                for &(col, u) in &self.u_rows[i] {
                    w[col] -= u * v;
                }
            }
        }
        for i in (0..k).rev() {
            let v = w[i];
            if v != 0.0 {
                for &(col, l) in &self.l_rows[i] {
                    w[col] -= l * v;
                }
            }
        }
        for (i, &r) in self.prow.iter().enumerate() {
            c[r] = w[i];
        }
    }

    /// Solve `B v = rhs`; `rhs` is dense by row, the result dense by basis position.
    pub fn ftran(&self, rhs: &[f64], cols: &[Vec<(usize, f64)>]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if self.k > 0 {
            let mut b: Vec<f64> = self.krow.iter().map(|&i| rhs[i]).collect();
            self.kernel_solve(&mut b);
            let mut acc = vec![0.0; m];
            for (t, &j) in self.kcol_var.iter().enumerate() {
                let v = b[t];
                out[self.kcol_pos[t]] = v;
                if v != 0.0 {
                    for &(i, a) in &cols[j] {
                        if self.row_k[i] == NONE {
                            acc[i] += a * v;
                        }
                    }
                }
            }
            for i in 0..m {
                let p = self.logical_pos[i];
                if p != NONE {
                    out[p] = acc[i] - rhs[i];
                }
            }
        } else {
            for i in 0..m {
                out[self.logical_pos[i]] = -rhs[i];
            }
        }
        for eta in &self.etas {
            let xp = out[eta.pos] / eta.pivot;
            out[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * xp;
                }
            }
        }
        out
    }

    /// Solve `B^T y = c`; `c` is dense by basis position, the result dense by row.
    pub fn btran(&self, c: &[f64], cols: &[Vec<(usize, f64)>]) -> Vec<f64> {
        let m = self.m;
        let mut c = c.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let mut y = vec![0.0; m];
        for i in 0..m {
            let p = self.logical_pos[i];
            if p != NONE {
                y[i] = -c[p];
            }
        }
        if self.k > 0 {
            let mut rhs = vec![0.0; self.k];
            for (t, &j) in self.kcol_var.iter().enumerate() {
                let mut s = c[self.kcol_pos[t]];
                for &(i, a) in &cols[j] {
                    if self.row_k[i] == NONE {
                        s -= a * y[i];
                    }
                }
                rhs[t] = s;
            }
            self.kernel_solve_transpose(&mut rhs);
            for (t, &i) in self.krow.iter().enumerate() {
                y[i] = rhs[t];
            }
        }
        y
    }

    /// Record the replacement of basis position `pos` by a column whose
    /// transformed image is `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > 1e-13)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
