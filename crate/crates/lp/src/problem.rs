use crate::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Multiplier mapping the user objective onto the internal minimization.
    pub(crate) fn internal_sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// True when `a` is strictly better than `b` by more than `tol`.
    pub fn better(self, a: f64, b: f64, tol: f64) -> bool {
        match self {
            Sense::Minimize => a < b - tol,
            Sense::Maximize => a > b + tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// A linear constraint `coefs · x (sense) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Row { coefs, sense, rhs }
    }

    pub fn le(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coefs, RowSense::Le, rhs)
    }

    pub fn ge(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coefs, RowSense::Ge, rhs)
    }

    pub fn eq(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coefs, RowSense::Eq, rhs)
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }

    /// Interval `[lo, hi]` the row activity must lie in.
    pub(crate) fn range(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
            RowSense::Eq => (self.rhs, self.rhs),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, obj: f64) -> usize {
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = (0..self.num_vars())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        self.rows.iter().map(|r| r.violation(x)).fold(bounds, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidProblem("bound vectors do not match variable count".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::InvalidProblem(format!("objective coefficient of var {j} is not finite")));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(LpError::InvalidProblem(format!(
                    "var {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidProblem(format!("var {j} has an empty domain")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            validate_row(row, n).map_err(|msg| LpError::InvalidProblem(format!("row {i}: {msg}")))?;
        }
        Ok(())
    }
}

pub(crate) fn validate_row(row: &Row, n: usize) -> Result<(), String> {
    if !row.rhs.is_finite() {
        return Err("right-hand side is not finite".into());
    }
    for &(j, a) in &row.coefs {
        if j >= n {
            return Err(format!("references var {j} but only {n} exist"));
        }
        if !a.is_finite() {
            return Err(format!("coefficient on var {j} is not finite"));
        }
    }
    Ok(())
}
