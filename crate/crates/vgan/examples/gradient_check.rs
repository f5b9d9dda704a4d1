//! Verify analytic gradients against central finite differences, for the
//! individual layers and for both full networks at stage 0.
//!
//! ```bash
//! cargo run --release -p vgan --example gradient_check
//! ```

use vgan::selftest::{gradient_layer_suite, gradient_network_suite};

fn main() -> vgan::Result<()> {
    let layer_err = gradient_layer_suite(5)?;
    println!("layer gradients: max rel err {layer_err:.3e} (tolerance 1e-3)");

    let net_err = gradient_network_suite(5)?;
    println!("network gradients: max rel err {net_err:.3e} (tolerance 1e-2)");

    if layer_err < 1e-3 && net_err < 1e-2 {
        println!("all gradient checks passed");
        Ok(())
    } else {
        Err(vgan::VganError::NonFinite("gradient check exceeded tolerance".into()))
    }
}
