//! Joint-distribution check: parameters drawn from the prior, responses drawn
//! given the parameters, then a few sampler sweeps must leave the prior
//! marginals of d, c and ξ unchanged.

mod common;

#[test]
fn prior_marginals_are_invariant() {
    let out = common::geweke(5_000, 20, 20_240_601);
    println!("KS d {:.4}, c {:.4}, xi {:.4}", out.ks_d, out.ks_c, out.ks_xi);
    assert!(out.ks_d < 0.05, "KS for d = {}", out.ks_d);
    assert!(out.ks_c < 0.05, "KS for c = {}", out.ks_c);
    assert!(out.ks_xi < 0.05, "KS for xi = {}", out.ks_xi);
}

#[test]
fn bandwidth_marginal_cdf_is_a_cdf() {
    let f = |x| common::bandwidth_marginal_cdf(x, 1.5);
    assert_eq!(f(0.0), 0.0);
    assert!(f(1e-6) < 0.01 && f(1e6) > 0.99);
    assert!(f(0.1) < f(0.2) && f(0.2) < f(0.5));
}
