//! The algebraic identity corpus, written once over [`Real`] so that it can
//! be evaluated in double-double or exact rational arithmetic.
//!
//! This code deliberately does not call into [`crate::gas`]; the kernel is
//! compared against these forms, not the other way around.

use super::scalar::Real;

/// Sample point: gas constants, state and a pair of gradient variables.
#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub g: T,
    pub m: T,
    pub r: T,
    pub u: T,
    pub h: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Sample<T> {
    pub fn from_f64(g: f64, m: u32, r: f64, u: f64, h: f64, alpha: f64, beta: f64) -> Self {
        Self {
            g: T::from_f64(g),
            m: T::int(m as i64),
            r: T::from_f64(r),
            u: T::from_f64(u),
            h: T::from_f64(h),
            alpha: T::from_f64(alpha),
            beta: T::from_f64(beta),
        }
    }

    fn c1(&self) -> T {
        self.u.clone() - self.h.clone()
    }
    fn c2(&self) -> T {
        self.u.clone() + self.h.clone()
    }
    fn gm1(&self) -> T {
        self.g.clone() - T::int(1)
    }
    fn gp1(&self) -> T {
        self.g.clone() + T::int(1)
    }
    fn gm3(&self) -> T {
        self.g.clone() - T::int(3)
    }
    fn kappa(&self) -> T {
        T::int(2) / self.gm1()
    }
    /// `(gamma - 3) / (2 (gamma - 1))`
    fn lambda(&self) -> T {
        self.gm3() / (T::int(2) * self.gm1())
    }
    /// `(gamma - 1)/2 u^2 - h^2`
    fn common(&self) -> T {
        self.gm1() / T::int(2) * self.u.clone() * self.u.clone() - self.h.clone() * self.h.clone()
    }
    fn a1(&self) -> T {
        let c1 = self.c1();
        self.m.clone() * self.c2() / (T::int(2) * self.r.clone() * c1.clone() * c1) * self.common()
    }
    fn a2(&self) -> T {
        let c2 = self.c2();
        self.m.clone() * self.c1() / (T::int(2) * self.r.clone() * c2.clone() * c2) * self.common()
    }
}

/// Two sides of an identity, each a list of summands.
#[derive(Debug, Clone)]
pub struct Balance<T> {
    pub lhs: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> Balance<T> {
    pub fn new(lhs: Vec<T>, rhs: Vec<T>) -> Self {
        Self { lhs, rhs }
    }

    pub fn lhs_sum(&self) -> T {
        sum(&self.lhs)
    }

    pub fn rhs_sum(&self) -> T {
        sum(&self.rhs)
    }

    pub fn scale(&self) -> T {
        self.lhs
            .iter()
            .chain(self.rhs.iter())
            .map(|t| t.magnitude())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// `|sum(lhs) - sum(rhs)| / max |term|`; zero when every term vanishes.
    pub fn residual(&self) -> f64 {
        let scale = self.scale();
        if scale == T::zero() {
            return 0.0;
        }
        ((self.lhs_sum() - self.rhs_sum()).magnitude() / scale).to_f64()
    }
}

fn sum<T: Real>(terms: &[T]) -> T {
    terms.iter().cloned().fold(T::zero(), |a, b| a + b)
}

fn max_scale<T: Real>(lines: &[Vec<T>]) -> T {
    lines
        .iter()
        .flatten()
        .map(|t| t.magnitude())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Residual of a chain of equalities: max over consecutive lines of the
/// difference of line sums, normalized by the largest term on any line.
pub fn chain_residual<T: Real>(lines: &[Vec<T>]) -> f64 {
    let scale = max_scale(lines);
    if scale == T::zero() {
        return 0.0;
    }
    lines
        .windows(2)
        .map(|w| ((sum(&w[0]) - sum(&w[1])).magnitude() / scale.clone()).to_f64())
        .fold(0.0, f64::max)
}

/// Lines of the chain reducing the `B1` combination to `(gamma-3) u^2 h^2`.
pub fn b_chain_c2<T: Real>(s: &Sample<T>) -> Vec<Vec<T>> {
    let (u, h) = (s.u.clone(), s.h.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let two = T::int(2);
    let q = s.gm1() / T::int(4);
    let half_gm1 = s.gm1() / two.clone();
    let u2 = u.clone() * u.clone();
    let h2 = h.clone() * h.clone();
    let tail = -(h.clone() * u.clone() * c1.clone() * (h.clone() + half_gm1.clone() * u.clone()));
    let first = c2.clone() * c2.clone() / two.clone() * s.common();
    vec![
        vec![
            first.clone(),
            -(c2.clone() * q.clone() * u2.clone() * u.clone()),
            c2.clone() * h2.clone() * h.clone() / two.clone(),
            c2.clone() * q.clone() * u2.clone() * h.clone(),
            -(c2.clone() * u.clone() * h2.clone() / two.clone()),
            tail.clone(),
        ],
        vec![
            first,
            -(c1.clone() * c2.clone() / two.clone() * (half_gm1.clone() * u2.clone() + h2.clone())),
            tail.clone(),
        ],
        vec![
            half_gm1.clone() * u2.clone() * c2.clone() * h.clone(),
            -(h2.clone() * c2.clone() * u.clone()),
            tail,
        ],
        vec![
            half_gm1 * u2.clone() * h.clone() * (c2.clone() - c1.clone()),
            -(h2.clone() * u.clone() * (c2 + c1)),
        ],
        vec![s.gm3() * u2 * h2],
    ]
}

/// Lines of the chain reducing the `B2` combination to `(gamma-3) u^2 h^2`.
pub fn b_chain_c1<T: Real>(s: &Sample<T>) -> Vec<Vec<T>> {
    let (u, h) = (s.u.clone(), s.h.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let two = T::int(2);
    let q = s.gm1() / T::int(4);
    let half_gm1 = s.gm1() / two.clone();
    let u2 = u.clone() * u.clone();
    let h2 = h.clone() * h.clone();
    let tail = -(h.clone() * u.clone() * c2.clone() * (h.clone() - half_gm1.clone() * u.clone()));
    let first = c1.clone() * c1.clone() / two.clone() * s.common();
    vec![
        vec![
            first.clone(),
            -(c1.clone() * q.clone() * u2.clone() * u.clone()),
            -(c1.clone() * h2.clone() * h.clone() / two.clone()),
            -(c1.clone() * q.clone() * u2.clone() * h.clone()),
            -(c1.clone() * u.clone() * h2.clone() / two.clone()),
            tail.clone(),
        ],
        vec![
            first,
            -(c1.clone() * c2.clone() / two.clone() * (half_gm1.clone() * u2.clone() + h2.clone())),
            tail.clone(),
        ],
        vec![
            -(half_gm1.clone() * u2.clone() * c1.clone() * h.clone()),
            -(h2.clone() * c1.clone() * u.clone()),
            tail,
        ],
        vec![
            half_gm1 * u2.clone() * h.clone() * (c2.clone() - c1.clone()),
            -(h2.clone() * u.clone() * (c1 + c2)),
        ],
        vec![s.gm3() * u2 * h2],
    ]
}

fn b1<T: Real>(s: &Sample<T>) -> T {
    let (u, h) = (s.u.clone(), s.h.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let q = s.gm1() / T::int(4);
    let two = T::int(2);
    let inner = q.clone() * u.clone() * u.clone() * u.clone() - h.clone() * h.clone() * h.clone() / two.clone()
        - q * u.clone() * u.clone() * h.clone()
        + u.clone() * h.clone() * h.clone() / two.clone()
        + h.clone() * u.clone() * c1.clone() / c2 * (h + s.gm1() / two * u);
    s.m.clone() / (s.r.clone() * c1.clone() * c1) * inner
}

fn b2<T: Real>(s: &Sample<T>) -> T {
    let (u, h) = (s.u.clone(), s.h.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let q = s.gm1() / T::int(4);
    let two = T::int(2);
    let inner = q.clone() * u.clone() * u.clone() * u.clone() + h.clone() * h.clone() * h.clone() / two.clone()
        + q * u.clone() * u.clone() * h.clone()
        + u.clone() * h.clone() * h.clone() / two.clone()
        + h.clone() * u.clone() * c2.clone() / c1 * (h - s.gm1() / two * u);
    s.m.clone() / (s.r.clone() * c2.clone() * c2) * inner
}

/// Summands of `∂1 beta` in the Lemma form.
pub fn lemma_beta_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let four = T::int(4);
    vec![
        -(s.gp1() / four.clone() * b.clone() * b.clone()),
        -((T::int(3) - s.g.clone()) / four * a.clone() * b.clone()),
        s.a1() * a,
        -(b1(s) * b),
    ]
}

pub fn lemma_alpha_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let four = T::int(4);
    vec![
        -(s.gp1() / four.clone() * a.clone() * a.clone()),
        -((T::int(3) - s.g.clone()) / four * a.clone() * b.clone()),
        s.a2() * b,
        -(b2(s) * a),
    ]
}

/// Summands of `∂1 beta` in the reduced form.
pub fn simplified_beta_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let four = T::int(4);
    let damp = s.gm3() * s.m.clone() / s.r.clone() * s.u.clone() * s.u.clone() * s.h.clone() * s.h.clone();
    vec![
        -(s.gp1() / four.clone() * b.clone() * b.clone()),
        s.gm3() / four * a.clone() * b.clone(),
        s.a1() * (a - b.clone()),
        damp / (c1.clone() * c1 * c2) * b,
    ]
}

pub fn simplified_alpha_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let four = T::int(4);
    let damp = s.gm3() * s.m.clone() / s.r.clone() * s.u.clone() * s.u.clone() * s.h.clone() * s.h.clone();
    vec![
        -(s.gp1() / four.clone() * a.clone() * a.clone()),
        s.gm3() / four * a.clone() * b.clone(),
        s.a2() * (b - a.clone()),
        damp / (c2.clone() * c2 * c1) * a,
    ]
}

/// `∂1 h / h` from the alpha form of the 1-directional derivative of `h`.
fn d1_log_h<T: Real>(s: &Sample<T>) -> T {
    -(s.gm1() / T::int(2)) * (s.alpha.clone() + s.m.clone() * s.u.clone() * s.u.clone() / (s.r.clone() * s.c2()))
}

/// `∂2 h / h`, the 2-family analogue obtained from the primitive system.
fn d2_log_h<T: Real>(s: &Sample<T>) -> T {
    -(s.gm1() / T::int(2)) * (s.beta.clone() + s.m.clone() * s.u.clone() * s.u.clone() / (s.r.clone() * s.c1()))
}

/// Weighted right-hand side of `∂1 beta_t`, divided through by `h^lambda`
/// and expressed in unweighted variables (no fractional powers remain).
pub fn tilde_beta_rhs_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let u2 = s.u.clone() * s.u.clone();
    vec![
        -(s.gp1() / T::int(4) * b.clone() * b.clone()),
        s.a1() * a,
        -(s.m.clone() * (s.gm3() * u2 + c2.clone() * c2) / (T::int(2) * s.r.clone() * c1) * b),
    ]
}

pub fn tilde_alpha_rhs_terms<T: Real>(s: &Sample<T>) -> Vec<T> {
    let (a, b) = (s.alpha.clone(), s.beta.clone());
    let (c1, c2) = (s.c1(), s.c2());
    let u2 = s.u.clone() * s.u.clone();
    vec![
        -(s.gp1() / T::int(4) * a.clone() * a.clone()),
        s.a2() * b,
        -(s.m.clone() * (s.gm3() * u2 + c1.clone() * c1) / (T::int(2) * s.r.clone() * c2) * a),
    ]
}

/// `h^-lambda ∂1(h^lambda beta) = ∂1 beta + lambda beta ∂1h / h` against the
/// weighted form.
pub fn tilde_beta_chain<T: Real>(s: &Sample<T>) -> Balance<T> {
    let mut lhs = simplified_beta_terms(s);
    lhs.push(s.lambda() * s.beta.clone() * d1_log_h(s));
    Balance::new(lhs, tilde_beta_rhs_terms(s))
}

/// `h^-lambda ∂2(h^lambda alpha)` against the weighted form.
pub fn tilde_alpha_chain<T: Real>(s: &Sample<T>) -> Balance<T> {
    let mut lhs = simplified_alpha_terms(s);
    lhs.push(s.lambda() * s.alpha.clone() * d2_log_h(s));
    Balance::new(lhs, tilde_alpha_rhs_terms(s))
}

/// Primitive-form evaluation: gradients from `(alpha, beta)`, time
/// derivatives eliminated through the PDE, then directional derivatives.
#[derive(Debug, Clone)]
pub struct Primitive<T> {
    pub u_r: T,
    pub h_r: T,
    pub u_t: T,
    pub h_t: T,
}

pub fn primitive<T: Real>(s: &Sample<T>) -> Primitive<T> {
    let (u, h) = (s.u.clone(), s.h.clone());
    let denom = s.r.clone() * s.c1() * s.c2();
    let h_r = s.gm1() / T::int(4)
        * (s.alpha.clone() - s.beta.clone() - T::int(2) * s.m.clone() * u.clone() * u.clone() * h.clone() / denom.clone());
    let u_r = (s.alpha.clone() + s.beta.clone()) / T::int(2) + s.m.clone() * u.clone() * h.clone() * h.clone() / denom;
    let half_gm1 = s.gm1() / T::int(2);
    let h_t = -(u.clone() * h_r.clone())
        - half_gm1.clone() * h.clone() * u_r.clone()
        - half_gm1 * s.m.clone() * u.clone() * h.clone() / s.r.clone();
    let u_t = -(u * u_r.clone()) - s.kappa() * h * h_r.clone();
    Primitive { u_r, h_r, u_t, h_t }
}

/// Each directional identity as a balance: `[direct] = [closed form]`.
pub fn directional_balances<T: Real>(s: &Sample<T>) -> Vec<(&'static str, Balance<T>)> {
    let p = primitive(s);
    let (c1, c2) = (s.c1(), s.c2());
    let (u, h) = (s.u.clone(), s.h.clone());
    let m = s.m.clone();
    let r = s.r.clone();
    let kappa = s.kappa();
    let half_gm1 = s.gm1() / T::int(2);

    let d1h = vec![p.h_t.clone(), c1.clone() * p.h_r.clone()];
    let d1u = vec![p.u_t.clone(), c1.clone() * p.u_r.clone()];
    let d2h = vec![p.h_t.clone(), c2.clone() * p.h_r.clone()];
    let d2u = vec![p.u_t.clone(), c2.clone() * p.u_r.clone()];

    let d1h_form = vec![
        -(half_gm1.clone() * h.clone() * s.alpha.clone()),
        -(half_gm1.clone() * h.clone() * m.clone() * u.clone() * u.clone() / (r.clone() * c2.clone())),
    ];
    let d1u_form = vec![
        -(h.clone() * s.alpha.clone()),
        h.clone() * m.clone() * u.clone() * h.clone() / (r.clone() * c2.clone()),
    ];
    let half_gp1 = s.gp1() / T::int(2);
    let d1c2_form = vec![
        -(half_gp1.clone() * h.clone() * s.alpha.clone()),
        -(half_gp1 * h.clone() * m.clone() * u.clone() * (s.gm1() * u.clone() - T::int(2) * h.clone())
            / (s.gp1() * r.clone() * c2.clone())),
    ];
    let d2h_form = vec![
        -(half_gm1.clone() * h.clone() * s.beta.clone()),
        -(half_gm1 * h.clone() * m.clone() * u.clone() * u.clone() / (r.clone() * c1)),
    ];
    let src = m * u * h / r;

    let mut d1c2 = d1u.clone();
    d1c2.extend(d1h.iter().cloned());
    let mut d1z = d1u.clone();
    d1z.extend(d1h.iter().map(|t| -(kappa.clone() * t.clone())));
    let mut d2w = d2u;
    d2w.extend(d2h.iter().map(|t| kappa.clone() * t.clone()));

    vec![
        ("d1_h", Balance::new(d1h, d1h_form)),
        ("d1_u", Balance::new(d1u, d1u_form)),
        ("d1_c2", Balance::new(d1c2, d1c2_form)),
        ("d2_h", Balance::new(d2h, d2h_form)),
        ("d1_z", Balance::new(d1z, vec![src.clone()])),
        ("d2_w", Balance::new(d2w, vec![-src])),
    ]
}

/// Closed-form values used as the reference for kernel comparisons.
pub fn reference_d1<T: Real>(s: &Sample<T>) -> [T; 3] {
    let b = directional_balances(s);
    [b[0].1.rhs_sum(), b[1].1.rhs_sum(), b[2].1.rhs_sum()]
}
