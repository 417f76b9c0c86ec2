//! Rotates a random state into the frame where its correlation matrix is diagonal.

use nlocal::states::random_state;

fn main() {
    let rho = random_state(42);
    println!("lab-frame correlations:\n{:?}", rho.correlation_matrix());
    let canon = rho.canonical_form();
    println!("canonical correlations:\n{:?}", canon.state.correlation_matrix());
    let t = canon.frame.tau;
    println!("(tau0, tau1, tau2) = ({:.6}, {:.6}, {:.6})", t.tau0, t.tau1, t.tau2);
    println!("eigenvalues before {:?}", rho.eigenvalues());
    println!("eigenvalues after  {:?}", canon.state.eigenvalues());
}
