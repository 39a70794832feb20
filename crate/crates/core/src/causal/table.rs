use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LogitFit, OlsFit};

pub const NOTE: &str = "Note: *p<0.1; **p<0.05; ***p<0.01";
const ROW_ORDER: [&str; 4] = ["merged", "blockn", "merged:blockn", "Intercept"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Fit {
    Ols(OlsFit),
    Logit(LogitFit),
}

impl Fit {
    pub fn columns(&self) -> &[String] {
        match self {
            Fit::Ols(f) => &f.columns,
            Fit::Logit(f) => &f.columns,
        }
    }

    fn parts(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        match self {
            Fit::Ols(f) => (&f.coefficients, &f.std_errors, &f.t_values, &f.p_values),
            Fit::Logit(f) => (&f.coefficients, &f.std_errors, &f.z_values, &f.p_values),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Fit::Ols(f) => f.n,
            Fit::Logit(f) => f.n,
        }
    }

    /// `(estimate, std error, statistic, p-value)` for a named regressor.
    pub fn term(&self, name: &str) -> Option<(f64, f64, f64, f64)> {
        let i = self.columns().iter().position(|c| c == name)?;
        let (b, se, t, p) = self.parts();
        Some((b[i], se[i], t[i], p[i]))
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn opt3(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_default()
}

/// Aligned plain-text table with one column per fit.
pub fn render_text(outcome: &str, fits: &[Fit]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for name in ROW_ORDER {
        if !fits.iter().any(|f| f.term(name).is_some()) {
            continue;
        }
        let (mut est, mut se) = (Vec::new(), Vec::new());
        for f in fits {
            match f.term(name) {
                Some((b, s, _, p)) => {
                    est.push(format!("{b:.3}{}", stars(p)));
                    se.push(format!("({s:.3})"));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push((name.to_string(), est));
        rows.push((String::new(), se));
    }
    let split = rows.len();

    rows.push(("Observations".into(), fits.iter().map(|f| thousands(f.n())).collect()));
    let any_ols = fits.iter().any(|f| matches!(f, Fit::Ols(_)));
    let any_logit = fits.iter().any(|f| matches!(f, Fit::Logit(_)));
    if any_ols {
        let ols = |g: &dyn Fn(&OlsFit) -> String| -> Vec<String> {
            fits.iter()
                .map(|f| match f {
                    Fit::Ols(o) => g(o),
                    Fit::Logit(_) => String::new(),
                })
                .collect()
        };
        rows.push(("R2".into(), ols(&|o| opt3(o.r_squared))));
        rows.push(("Adjusted R2".into(), ols(&|o| opt3(o.adj_r_squared))));
        rows.push((
            "Residual Std. Error".into(),
            ols(&|o| format!("{:.3} (df = {})", o.residual_se, o.df_resid)),
        ));
        rows.push((
            "F Statistic".into(),
            ols(&|o| match o.f_stat {
                Some(f) => format!(
                    "{f:.3}{} (df = {}; {})",
                    stars(o.f_p_value.unwrap_or(1.0)),
                    o.columns.len() - 1,
                    o.df_resid
                ),
                None => String::new(),
            }),
        ));
    }
    if any_logit {
        let logit = |g: &dyn Fn(&LogitFit) -> String| -> Vec<String> {
            fits.iter()
                .map(|f| match f {
                    Fit::Logit(l) => g(l),
                    Fit::Ols(_) => String::new(),
                })
                .collect()
        };
        rows.push(("Log Likelihood".into(), logit(&|l| format!("{:.3}", l.log_likelihood))));
        rows.push(("Akaike Inf. Crit.".into(), logit(&|l| format!("{:.3}", l.aic()))));
    }

    let heads: Vec<String> = (1..=fits.len()).map(|i| format!("({i})")).collect();
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(12);
    let col_w = rows
        .iter()
        .flat_map(|r| r.1.iter().map(|c| c.chars().count()))
        .chain(heads.iter().map(|h| h.len()))
        .max()
        .unwrap_or(0)
        + 2;
    let width = label_w + col_w * fits.len();
    let rule_heavy = "=".repeat(width);
    let rule = "-".repeat(width);

    let line = |label: &str, cells: &[String]| {
        let mut s = format!("{label:<label_w$}");
        for c in cells {
            let pad = col_w.saturating_sub(c.chars().count());
            s.push_str(&" ".repeat(pad));
            s.push_str(c);
        }
        s.trim_end().to_string()
    };

    let mut out = Vec::new();
    out.push(rule_heavy.clone());
    let title = format!("Dependent variable: {outcome}");
    out.push(format!("{:>width$}", title, width = width.max(title.len())));
    out.push(line("", &heads));
    out.push(rule.clone());
    for (label, cells) in &rows[..split] {
        out.push(line(label, cells));
    }
    out.push(rule);
    for (label, cells) in &rows[split..] {
        out.push(line(label, cells));
    }
    out.push(rule_heavy);
    out.push(NOTE.to_string());
    out.join("\n") + "\n"
}

fn term_json(f: &Fit) -> Value {
    let mut terms = serde_json::Map::new();
    for name in f.columns() {
        let (b, se, stat, p) = f.term(name).expect("column exists");
        terms.insert(
            name.clone(),
            json!({
                "estimate": b,
                "std_error": se,
                "statistic": stat,
                "p_value": p,
                "stars": stars(p),
            }),
        );
    }
    Value::Object(terms)
}

pub fn render_json(outcome: &str, fits: &[Fit]) -> Value {
    let cols: Vec<Value> = fits
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut v = json!({
                "column": format!("({})", i + 1),
                "n": f.n(),
                "terms": term_json(f),
            });
            let obj = v.as_object_mut().expect("object");
            match f {
                Fit::Ols(o) => {
                    obj.insert("family".into(), json!("ols"));
                    obj.insert("covariance".into(), json!(o.covariance));
                    obj.insert("r_squared".into(), json!(o.r_squared));
                    obj.insert("adj_r_squared".into(), json!(o.adj_r_squared));
                    obj.insert("residual_se".into(), json!(o.residual_se));
                    obj.insert("df_resid".into(), json!(o.df_resid));
                    obj.insert("f_stat".into(), json!(o.f_stat));
                    obj.insert("f_p_value".into(), json!(o.f_p_value));
                }
                Fit::Logit(l) => {
                    obj.insert("family".into(), json!("logit"));
                    obj.insert("log_likelihood".into(), json!(l.log_likelihood));
                    obj.insert("aic".into(), json!(l.aic()));
                    obj.insert("iterations".into(), json!(l.iterations));
                    obj.insert("converged".into(), json!(l.converged));
                }
            }
            v
        })
        .collect();
    json!({ "outcome": outcome, "note": NOTE, "columns": cols })
}
