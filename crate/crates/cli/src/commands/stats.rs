use lexiground_core::stats::{proportions_test, sign_test, BinomialTest};

use super::method_name;
use crate::error::{runtime, CliError};

/// Print an exact binomial proportions test to stdout.
pub fn run_proportions(successes: u64, n: u64, p0: f64) -> Result<(), CliError> {
    let test = proportions_test(successes, n, p0).map_err(runtime)?;
    print_test("proportions", &test);
    Ok(())
}

/// Print a paired sign test (wins out of non-tied comparisons) to stdout.
pub fn run_sign_test(successes: u64, n: u64) -> Result<(), CliError> {
    let test = sign_test(successes, n).map_err(runtime)?;
    print_test("sign-test", &test);
    Ok(())
}

fn print_test(name: &str, test: &BinomialTest) {
    println!("test = {name}");
    println!("successes = {}", test.successes);
    println!("n = {}", test.n);
    println!("p0 = {}", test.p0);
    println!("estimate = {}", test.estimate);
    println!("p_two_sided = {}", test.p_value);
    println!("p_greater = {}", test.p_greater);
    println!("p_less = {}", test.p_less);
    println!("method = {}", method_name(test.method));
}
