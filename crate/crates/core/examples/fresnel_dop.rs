//! Fresnel reflectances and the diffuse degree of polarization versus the
//! viewing angle, with the zenith recovered by inverting the latter.

use polcap::brdf::{diffuse_dop, fresnel, DEFAULT_IOR};
use polcap::inverse::invert_diffuse_dop;

fn main() -> polcap::Result<()> {
    let brewster = DEFAULT_IOR.atan().to_degrees();
    println!("ior {DEFAULT_IOR}, Brewster angle {brewster:.2} deg");
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "theta", "r_s", "r_p", "dop", "inverted");
    for deg in (0..=85).step_by(5).chain([89]) {
        let t = (deg as f64).to_radians();
        let f = fresnel(t, DEFAULT_IOR)?;
        let p = diffuse_dop(t, DEFAULT_IOR);
        let back = invert_diffuse_dop(p, DEFAULT_IOR).acos().to_degrees();
        println!("{deg:>6} {:>9.5} {:>9.5} {p:>9.5} {back:>9.3}", f.r_s, f.r_p);
    }
    Ok(())
}
