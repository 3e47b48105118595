//! Point evaluation of the library's functions for `compute` and `table`.

use std::sync::Arc;

use smooth_rough::arith::{floor_count, pi_product, sieve_primes};
use smooth_rough::debruijn::{mu_y, v_approx, v_star_approx, w_approx};
use smooth_rough::error_terms::{delta, q_error, q_star_error, r_error, r_star_error};
use smooth_rough::special::{omega, rho, rho_prime};
use smooth_rough::{Context64, Tables64};

use crate::output::fmt15;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Psi,
    Phi,
    Rho,
    RhoPrime,
    Omega,
    Mu,
    Lambda,
    V,
    VStar,
    W,
    Delta,
    Q,
    QStar,
    R,
    RStar,
    PiProduct,
}

/// Which arguments a function takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    U,
    UY,
    XY,
    Y,
}

impl Function {
    pub const ALL: [Function; 16] = [
        Function::Psi,
        Function::Phi,
        Function::Rho,
        Function::RhoPrime,
        Function::Omega,
        Function::Mu,
        Function::Lambda,
        Function::V,
        Function::VStar,
        Function::W,
        Function::Delta,
        Function::Q,
        Function::QStar,
        Function::R,
        Function::RStar,
        Function::PiProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Psi => "psi",
            Function::Phi => "phi",
            Function::Rho => "rho",
            Function::RhoPrime => "rho_prime",
            Function::Omega => "omega",
            Function::Mu => "mu",
            Function::Lambda => "lambda",
            Function::V => "v",
            Function::VStar => "v_star",
            Function::W => "w",
            Function::Delta => "delta",
            Function::Q => "q",
            Function::QStar => "q_star",
            Function::R => "r",
            Function::RStar => "r_star",
            Function::PiProduct => "pi_product",
        }
    }

    pub fn parse(s: &str) -> Result<Function, CliError> {
        Function::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown function {s:?}")))
    }

    pub fn arity(self) -> Arity {
        match self {
            Function::Rho | Function::RhoPrime | Function::Omega => Arity::U,
            Function::Mu => Arity::UY,
            Function::PiProduct => Arity::Y,
            _ => Arity::XY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Count(u64),
    Real(f64),
}

impl Value {
    pub fn render(self) -> String {
        match self {
            Value::Count(n) => n.to_string(),
            Value::Real(v) => fmt15(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub x: Option<f64>,
    pub y: Option<u64>,
    pub u: Option<f64>,
    pub values: Vec<Value>,
}

impl Row {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.x.map(fmt15).unwrap_or_default(),
            self.y.map(|y| y.to_string()).unwrap_or_default(),
            self.u.map(fmt15).unwrap_or_default(),
        ];
        r.extend(self.values.iter().map(|v| v.render()));
        r
    }
}

fn at_point(f: Function, ctx: &Context64, x: f64) -> smooth_rough::Result<Value> {
    let t = ctx.tables();
    let q = || ctx.query(x);
    Ok(match f {
        Function::Psi => Value::Count(ctx.psi(x)?),
        Function::Phi => Value::Count(ctx.phi(x)?),
        Function::Lambda => Value::Real(ctx.lambda(x)?),
        Function::V => Value::Real(v_approx(&q()?, ctx.mertens(), t)?),
        Function::VStar => Value::Real(v_star_approx(&q()?, t)?),
        Function::W => Value::Real(w_approx(&q()?, ctx.mertens(), t)?),
        Function::Delta => Value::Real(delta(ctx, x)?),
        Function::Q => Value::Real(q_error(ctx, x)?),
        Function::QStar => Value::Real(q_star_error(ctx, x)?),
        Function::R => Value::Real(r_error(ctx, x)?),
        Function::RStar => Value::Real(r_star_error(ctx, x)?),
        _ => unreachable!("not an (x, y) function"),
    })
}

/// Rows in x-major (u-major) then y order. All functions must share an arity.
pub fn evaluate(
    fns: &[Function],
    xs: Option<&[f64]>,
    us: Option<&[f64]>,
    ys: Option<&[u64]>,
    tables: &Arc<Tables64>,
) -> Result<Vec<Row>, CliError> {
    let arity = fns[0].arity();
    if fns.iter().any(|f| f.arity() != arity) {
        return Err(CliError::Usage("functions in one table must take the same arguments".into()));
    }
    fn need<'a>(v: Option<&'a [f64]>, f: Function, flag: &str) -> Result<&'a [f64], CliError> {
        v.filter(|v| !v.is_empty())
            .ok_or_else(|| CliError::Usage(format!("{} needs {flag}", f.name())))
    }
    let need_y = || {
        ys.filter(|v| !v.is_empty())
            .ok_or_else(|| CliError::Usage(format!("{} needs --y", fns[0].name())))
    };
    let mut rows = Vec::new();
    match arity {
        Arity::U => {
            for &u in need(us, fns[0], "--u")? {
                let values = fns
                    .iter()
                    .map(|&f| {
                        Ok(Value::Real(match f {
                            Function::Rho => rho(u, &tables.dickman)?,
                            Function::RhoPrime => rho_prime(u, &tables.dickman)?,
                            _ => omega(u, &tables.buchstab)?,
                        }))
                    })
                    .collect::<smooth_rough::Result<Vec<_>>>()?;
                rows.push(Row {
                    x: None,
                    y: None,
                    u: Some(u),
                    values,
                });
            }
        }
        Arity::UY => {
            let ys = need_y()?;
            for &u in need(us, fns[0], "--u")? {
                for &y in ys {
                    rows.push(Row {
                        x: None,
                        y: Some(y),
                        u: Some(u),
                        values: vec![Value::Real(mu_y(u, y, tables)?)],
                    });
                }
            }
        }
        Arity::Y => {
            let ys = need_y()?;
            let top = ys.iter().copied().max().unwrap_or(2);
            if top < 2 {
                return Err(smooth_rough::Error::Domain(format!("y = {top} must be at least 2")).into());
            }
            if top > tables.caps.max_x {
                let msg = format!("y = {top} exceeds max_x = {}", tables.caps.max_x);
                return Err(smooth_rough::Error::Resource(msg).into());
            }
            let primes = sieve_primes(top)?;
            for &y in ys {
                rows.push(Row {
                    x: None,
                    y: Some(y),
                    u: None,
                    values: vec![Value::Real(pi_product(y, &primes)?)],
                });
            }
        }
        Arity::XY => {
            let xs = need(xs, fns[0], "--x")?;
            let ys = need_y()?;
            let x_max = xs.iter().copied().fold(1.0f64, f64::max);
            let contexts = ys
                .iter()
                .map(|&y| Context64::new(Arc::clone(tables), y, floor_count(x_max).max(y)))
                .collect::<smooth_rough::Result<Vec<_>>>()?;
            for &x in xs {
                for ctx in &contexts {
                    let values = fns
                        .iter()
                        .map(|&f| at_point(f, ctx, x))
                        .collect::<smooth_rough::Result<Vec<_>>>()?;
                    let u = if x > 0.0 { Some(x.ln() / ctx.ln_y()) } else { None };
                    rows.push(Row {
                        x: Some(x),
                        y: Some(ctx.y()),
                        u,
                        values,
                    });
                }
            }
        }
    }
    Ok(rows)
}
