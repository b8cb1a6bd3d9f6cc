//! Tour of the statistical core: Clopper-Pearson bounds, the group-privacy
//! conversion, the complement rule, and the Monte-Carlo ceiling.

use dpaudit::estimator::{
    audit_eps, clopper_pearson, complement_candidates, eps_from_probs, eps_opt, BoundSide,
    TrialCounts,
};

fn main() -> dpaudit::Result<()> {
    // Exact binomial bounds at 500 trials, tail mass 0.005 per side.
    let lower = clopper_pearson(500, 500, 0.005, BoundSide::Lower)?;
    let upper = clopper_pearson(0, 500, 0.005, BoundSide::Upper)?;
    println!("500/500 successes -> lower bound {lower:.6}");
    println!("  0/500 successes -> upper bound {upper:.6}");

    // Perfect separation at T = 500, alpha = 0.01 caps the measurable eps.
    println!("eps_opt(500, 0.01, 1) = {:.4}", eps_opt(500, 0.01, 1)?);
    println!("eps_opt(500, 0.01, 2) = {:.4}", eps_opt(500, 0.01, 2)?);

    // The complement of the output set can carry more evidence: probabilities
    // (0.8, 0.4) give ln 2 directly but ln 3 through (0.6, 0.2).
    let (direct, complement) = complement_candidates(0.8, 0.4, 1, 0.0)?;
    println!("direct ln(0.8/0.4) = {direct:.6}, complement ln(0.6/0.2) = {complement:.6}");

    // Counts from a partially separating attack.
    let counts = TrialCounts::new(450, 50, 500)?;
    let estimate = audit_eps(&counts, 1, 0.0, 0.01)?;
    println!(
        "counts (450, 50) of 500 -> eps_lb {:.4} from bounds ({:.4}, {:.4})",
        estimate.eps_lb, estimate.p0_hat, estimate.p1_hat
    );

    // With delta > 0 the conversion solves the group-privacy polynomial.
    let with_delta = eps_from_probs(0.8, 0.4, 1, 1e-5)?;
    println!("eps at delta = 1e-5: {with_delta:.6}");
    Ok(())
}
