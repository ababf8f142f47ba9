#![no_main]

use heatlab_cli::config::parse_kernels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((gamma, lambda)) = parse_kernels(text) else { return };
    for t in [1e-3, 0.5, 1.0, 4.0] {
        let _ = gamma.eval(t);
        let _ = gamma.integral(t);
    }
    let x = vec![0.3; lambda.dim];
    let _ = lambda.eval_lambda(&x);
    let _ = lambda.mu_density(&x);
    let _ = heatlab::kernels::mu_moment_integral(&lambda, 2.0, 1e-8);
});
