//! Worked 2x2 regression for the `a b b# = λ b` formula with λ = -2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::additive::{sum_ginv_t24, AdditiveScenario, Branch};
use crate::error::Result;
use crate::ginv::group_inverse;
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::theorem::Theorem;

use super::verify::{verify, Check, Verdict, VerificationReport, VerifyOptions};

/// Absolute entrywise tolerance for every comparison with the worked values.
pub const EXAMPLE_TOL: f64 = 1e-12;

pub fn example_a() -> ComplexMatrix {
    ComplexMatrix::from_real(&[[-1.0, -1.0], [1.0, -3.0]])
}

pub fn example_b() -> ComplexMatrix {
    ComplexMatrix::from_real(&[[0.0, 1.0], [0.0, 1.0]])
}

pub fn expected_a_sharp() -> ComplexMatrix {
    ComplexMatrix::from_real(&[[-0.75, 0.25], [-0.25, -0.25]])
}

pub fn expected_sum_sharp() -> ComplexMatrix {
    ComplexMatrix::from_real(&[[-1.0, 0.0], [-0.5, -0.5]])
}

pub fn example_scenario() -> AdditiveScenario {
    AdditiveScenario::new(Theorem::T2_4, Complex64::new(-2.0, 0.0), example_a(), example_b())
        .expect("fixed 2x2 operands")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example26 {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub a_sharp: ComplexMatrix,
    pub b_sharp: ComplexMatrix,
    pub b_pi: ComplexMatrix,
    pub ab: ComplexMatrix,
    pub sum: ComplexMatrix,
    /// `-b# + b^π a# b^π - 2 b# a a# b^π + b# a b^π a# b^π` evaluated term by term.
    pub displayed_expression: ComplexMatrix,
    pub candidate: ComplexMatrix,
    pub expected: ComplexMatrix,
    pub branch: Branch,
    /// Named comparisons with the worked values (absolute, entrywise).
    pub checks: Vec<(String, Check)>,
    pub report: VerificationReport,
}

impl Example26 {
    pub fn pass(&self) -> bool {
        self.report.verdict == Verdict::Pass && self.checks.iter().all(|(_, c)| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, m) in [
            ("A", &self.a),
            ("B", &self.b),
            ("A#", &self.a_sharp),
            ("B#", &self.b_sharp),
            ("B^pi", &self.b_pi),
            ("AB", &self.ab),
            ("A+B", &self.sum),
            ("(A+B)# formula", &self.candidate),
        ] {
            out.push_str(&format!("{name:<15} {}\n", fmt_real(m)));
        }
        out.push_str(&format!("branch          {:?}\n", self.branch));
        for (name, c) in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            out.push_str(&format!("[{mark}] {name:<24} {:.3e}\n", c.value));
        }
        out.push_str(&format!("verdict         {:?}\n", self.report.verdict));
        out
    }
}

fn fmt_real(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let cells: Vec<String> = (0..m.cols()).map(|j| format!("{:.6}", m.get(i, j).re)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn run_example26(tol: &Tolerance) -> Result<Example26> {
    let s = example_scenario();
    let (a, b) = (s.a.clone(), s.b.clone());
    let ra = group_inverse(&a, tol)?;
    let rb = group_inverse(&b, tol)?;
    let (ag, bg, bpi) = (ra.ginv, rb.ginv, rb.spectral_projector);
    let ab = &a * &b;
    let sum = &a + &b;
    let displayed = {
        let t1 = -&bg;
        let t2 = &(&bpi * &ag) * &bpi;
        let t3 = (&(&(&bg * &a) * &ag) * &bpi).scale_real(-2.0);
        let t4 = &(&(&(&bg * &a) * &bpi) * &ag) * &bpi;
        &(&(&t1 + &t2) + &t3) + &t4
    };
    let out = sum_ginv_t24(&s, tol)?;
    let expected = expected_sum_sharp();
    let checks = vec![
        (
            "A#".to_string(),
            Check::new(ag.max_abs_diff(&expected_a_sharp()), EXAMPLE_TOL),
        ),
        ("B# = B".to_string(), Check::new(bg.max_abs_diff(&b), EXAMPLE_TOL)),
        (
            "AB = -2B (exact)".to_string(),
            Check::new(ab.max_abs_diff(&b.scale_real(-2.0)), 0.0),
        ),
        (
            "A+B (exact)".to_string(),
            Check::new(
                sum.max_abs_diff(&ComplexMatrix::from_real(&[[-1.0, 0.0], [1.0, -2.0]])),
                0.0,
            ),
        ),
        (
            "displayed expression".to_string(),
            Check::new(displayed.max_abs_diff(&expected), EXAMPLE_TOL),
        ),
        (
            "(A+B)# formula".to_string(),
            Check::new(out.candidate.max_abs_diff(&expected), EXAMPLE_TOL),
        ),
    ];
    let report = verify(
        &s.clone().into(),
        "example26",
        &VerifyOptions {
            tol: *tol,
            ..VerifyOptions::default()
        },
    )?;
    Ok(Example26 {
        a,
        b,
        a_sharp: ag,
        b_sharp: bg,
        b_pi: bpi,
        ab,
        sum,
        displayed_expression: displayed,
        candidate: out.candidate,
        expected,
        branch: out.branch,
        checks,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_worked_values() {
        let e = run_example26(&Tolerance::default()).unwrap();
        assert!(e.pass(), "{}", e.to_text());
        assert_eq!(e.branch, Branch::Generic);
        assert!(e.report.conclusion_residuals["formula vs oracle"].value <= 1e-10);
    }
}
