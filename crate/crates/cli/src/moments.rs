use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;

use clap::ValueEnum;
use kingman_core::law::to_f64;
use kingman_core::moments::{
    cov_u, cov_x, e_hat, e_l_window, e_t, e_u, e_x, hat_m, rho_cdf, var_l_window_asymptotic,
    var_l_window_exact, var_t, var_x,
};
use kingman_core::urn::{hypergeometric_pmf, tau_exact_tail};
use kingman_core::MomentOracle;
use num_rational::BigRational;
use serde_json::json;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "e_U")]
    EU,
    #[value(name = "cov_U")]
    CovU,
    /// `P(U_k = l)`.
    #[value(name = "p_U")]
    PU,
    #[value(name = "e_X")]
    EX,
    #[value(name = "var_X")]
    VarX,
    #[value(name = "cov_X")]
    CovX,
    #[value(name = "e_T")]
    ET,
    #[value(name = "var_T")]
    VarT,
    /// `P(rho < k)`.
    #[value(name = "rho_cdf")]
    RhoCdf,
    /// `P(tau >= k)`.
    #[value(name = "tau_tail")]
    TauTail,
    #[value(name = "e_L_window")]
    ELWindow,
    /// Leading-order asymptotic, float only.
    #[value(name = "var_L_window")]
    VarLWindow,
    /// Float only.
    #[value(name = "var_L_window_exact")]
    VarLWindowExact,
    #[value(name = "e_hat")]
    EHat,
    #[value(name = "var_hat")]
    VarHat,
    #[value(name = "fu_li_var")]
    FuLiVar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arity {
    Scalar,
    K,
    KL,
}

impl Quantity {
    pub fn name(&self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    fn arity(&self) -> Arity {
        use Quantity::*;
        match self {
            EU | EX | VarX | ET | VarT | RhoCdf | TauTail => Arity::K,
            CovU | PU | CovX => Arity::KL,
            _ => Arity::Scalar,
        }
    }
}

/// `K` or the inclusive range `LO..HI`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSpec(pub RangeInclusive<usize>);

impl FromStr for IndexSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad index {t:?}: {e}"));
        match s.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(format!("empty range {s:?}"));
                }
                Ok(IndexSpec(lo..=hi))
            }
            None => {
                let k = parse(s)?;
                Ok(IndexSpec(k..=k))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    fn float(&self) -> f64 {
        match self {
            Value::Exact(q) => to_f64(q),
            Value::Float(x) => *x,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{}/{}, {:?}", q.numer(), q.denom(), to_f64(q)),
            Value::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub value: Value,
}

#[derive(Debug, Clone)]
pub struct MomentsRequest {
    pub quantity: Quantity,
    pub n: usize,
    pub k: Option<IndexSpec>,
    pub l: Option<IndexSpec>,
    pub alpha: f64,
    pub beta: f64,
}

fn eval(req: &MomentsRequest, k: usize, l: usize) -> kingman_core::Result<Value> {
    use Quantity::*;
    let n = req.n;
    let exact = match req.quantity {
        EU => e_u(n, k)?,
        CovU => cov_u(n, k, l)?,
        // U_k >= 1 for 1 <= k <= n-1; the call still validates k.
        PU if l == 0 => hypergeometric_pmf(n, k, 0).map(|_| BigRational::from_integer(0.into()))?,
        PU => hypergeometric_pmf(n, k, l - 1)?,
        EX => e_x(n, k)?,
        VarX => var_x(n, k)?,
        CovX => cov_x(n, k, l)?,
        ET => e_t(n, k)?,
        VarT => var_t(n, k)?,
        RhoCdf => rho_cdf(n, k)?,
        TauTail => tau_exact_tail(n, k)?,
        ELWindow => e_l_window(n, req.alpha, req.beta)?,
        VarLWindow => return Ok(Value::Float(var_l_window_asymptotic(n, req.alpha, req.beta)?)),
        VarLWindowExact => return Ok(Value::Float(var_l_window_exact(n, req.alpha, req.beta)?)),
        EHat => e_hat(n, hat_m(n, req.alpha)?)?,
        VarHat => MomentOracle::new(n).var_hat(n, hat_m(n, req.alpha)?)?,
        FuLiVar => MomentOracle::new(n).fu_li_var(n)?,
    };
    Ok(Value::Exact(exact))
}

/// Evaluates the request over its index ranges. Explicit indices must all be
/// valid; omitted ones default to every index in `0..=n` the quantity accepts.
pub fn evaluate(req: &MomentsRequest) -> CliResult<Vec<Row>> {
    let arity = req.quantity.arity();
    if arity == Arity::Scalar && (req.k.is_some() || req.l.is_some()) {
        return usage(format!("{} takes no --k/--l", req.quantity.name()));
    }
    if arity == Arity::K && req.l.is_some() {
        return usage(format!("{} takes no --l", req.quantity.name()));
    }
    let range = |spec: &Option<IndexSpec>| spec.as_ref().map_or(0..=req.n, |s| s.0.clone());
    let strict = |spec: &Option<IndexSpec>| spec.is_some();
    let mut rows = Vec::new();
    match arity {
        Arity::Scalar => rows.push(Row { k: None, l: None, value: eval(req, 0, 0)? }),
        Arity::K => {
            for k in range(&req.k) {
                match eval(req, k, 0) {
                    Ok(value) => rows.push(Row { k: Some(k), l: None, value }),
                    Err(e) if strict(&req.k) => return Err(e.into()),
                    Err(_) => {}
                }
            }
        }
        Arity::KL => {
            let pairwise_order = req.quantity != Quantity::PU;
            for k in range(&req.k) {
                for l in range(&req.l) {
                    if pairwise_order && !strict(&req.l) && l < k {
                        continue;
                    }
                    match eval(req, k, l) {
                        Ok(value) => rows.push(Row { k: Some(k), l: Some(l), value }),
                        Err(e) if strict(&req.k) && strict(&req.l) => return Err(e.into()),
                        Err(_) => {}
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return usage(format!("no valid indices for {} at n = {}", req.quantity.name(), req.n));
    }
    Ok(rows)
}

pub fn write_text(rows: &[Row], out: &mut dyn Write) -> std::io::Result<()> {
    let single = rows.len() == 1;
    for row in rows {
        match (single, row.k, row.l) {
            (false, Some(k), Some(l)) => writeln!(out, "k={k} l={l}: {}", row.value)?,
            (false, Some(k), None) => writeln!(out, "k={k}: {}", row.value)?,
            _ => writeln!(out, "{}", row.value)?,
        }
    }
    Ok(())
}

pub const CSV_HEADER: &str = "quantity,n,k,l,alpha,beta,numerator,denominator,float_value";

pub fn write_csv(req: &MomentsRequest, rows: &[Row], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let (num, den) = match &row.value {
            Value::Exact(q) => (q.numer().to_string(), q.denom().to_string()),
            Value::Float(_) => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:?}",
            req.quantity.name(),
            req.n,
            opt(row.k),
            opt(row.l),
            req.alpha,
            req.beta,
            num,
            den,
            row.value.float()
        )?;
    }
    Ok(())
}

pub fn row_json(row: &Row) -> serde_json::Value {
    let (num, den) = match &row.value {
        Value::Exact(q) => (json!(q.numer().to_string()), json!(q.denom().to_string())),
        Value::Float(_) => (serde_json::Value::Null, serde_json::Value::Null),
    };
    json!({ "k": row.k, "l": row.l, "numerator": num, "denominator": den, "float_value": row.value.float() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(quantity: Quantity, n: usize) -> MomentsRequest {
        MomentsRequest { quantity, n, k: None, l: None, alpha: 0.0, beta: 1.0 }
    }

    fn text(r: &MomentsRequest) -> String {
        let mut buf = Vec::new();
        write_text(&evaluate(r).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn documented_outputs() {
        assert_eq!(text(&req(Quantity::FuLiVar, 3)), "2/1, 2.0\n");
        let mut r = req(Quantity::EU, 5);
        r.k = Some("2".parse().unwrap());
        assert_eq!(text(&r), "3/2, 1.5\n");
        let mut r = req(Quantity::EHat, 50);
        r.alpha = 0.5;
        assert!(text(&r).starts_with("86/49, 1.7551"));
    }

    #[test]
    fn default_ranges_skip_invalid_indices() {
        let rows = evaluate(&req(Quantity::EX, 6)).unwrap();
        assert_eq!(rows.iter().map(|r| r.k.unwrap()).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        let rows = evaluate(&req(Quantity::CovX, 5)).unwrap();
        assert!(rows.iter().all(|r| r.k < r.l));
    }

    #[test]
    fn explicit_bad_index_is_an_error() {
        let mut r = req(Quantity::EX, 6);
        r.k = Some("0..3".parse().unwrap());
        assert!(evaluate(&r).is_err());
        assert!("4..2".parse::<IndexSpec>().is_err());
        let mut r = req(Quantity::FuLiVar, 6);
        r.k = Some("1".parse().unwrap());
        assert!(evaluate(&r).is_err());
    }
}
