//! Regenerates the CLI test fixtures.
//!
//! ```text
//! cargo run -p microcavity --example make_fixtures -- crates/cli/tests/fixtures
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use microcavity::optics::{CavityGeometry, Topology, Wavelength};
use microcavity::profile::{synthesize_surface, write_surface_csv, SurfaceConfig};
use microcavity::reference::{self, ACTUATED_MIRROR};
use microcavity::spectra::{
    ladder_resonances, synthesize_scan, write_spectrum_csv, AxisSpec, Resonance, ScanConfig, Sidebands,
};

/// Raw-axis scale of the linewidth scans, MHz per unit.
const MHZ_PER_UNIT: f64 = 1.7;

fn linewidth_scan(sidebands: Option<Sidebands>, seed: u64) -> ScanConfig {
    ScanConfig {
        axis: AxisSpec::Raw {
            start_ghz: 234_999.4,
            mhz_per_unit: MHZ_PER_UNIT,
            unit: 1.0 / MHZ_PER_UNIT,
            points: 1201,
        },
        resonances: vec![Resonance {
            frequency_ghz: 235_000.0,
            fwhm_mhz: reference::PC_F_LINEWIDTH_MHZ,
            contrast: 0.5,
        }],
        sidebands,
        noise_sigma: 0.02,
        seed,
    }
}

fn ladder_scan() -> microcavity::Result<ScanConfig> {
    let geom = CavityGeometry::with_effective_length(Topology::PlanoConcave, 69.3, reference::PC_F_FSR_LENGTH_UM)?;
    let fundamental = Wavelength::from_nm(reference::PC_F_FUNDAMENTAL_NM)?;
    let mut resonances = ladder_resonances(&geom, fundamental, 6, 0..=0, 20e3, 0.6, 0.8)?;
    resonances.extend(ladder_resonances(&geom, fundamental, 0, 1..=1, 20e3, 0.6, 0.8)?);
    let nu00 = fundamental.frequency_thz() * 1e3;
    let (lo_nm, hi_nm) = (microcavity::spectra::ghz_to_nm(nu00 + 21e3), microcavity::spectra::ghz_to_nm(nu00 - 1e3));
    Ok(ScanConfig {
        axis: AxisSpec::Wavelength { start_nm: lo_nm, stop_nm: hi_nm, points: 6001 },
        resonances,
        sidebands: None,
        noise_sigma: 0.005,
        seed: 11,
    })
}

fn write<F: FnOnce(BufWriter<File>) -> microcavity::Result<()>>(dir: &Path, name: &str, f: F) {
    let path = dir.join(name);
    let file = File::create(&path).unwrap_or_else(|e| panic!("cannot create {}: {e}", path.display()));
    f(BufWriter::new(file)).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn main() -> microcavity::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "crates/cli/tests/fixtures".into()).into();
    std::fs::create_dir_all(&dir)?;
    let modulation = Sidebands { offset_mhz: reference::SIDEBAND_MODULATION_MHZ, depth_ratio: 0.5 };

    let scan = synthesize_scan(&linewidth_scan(Some(modulation), 3))?;
    write(&dir, "pcf_linewidth_raw.csv", |w| write_spectrum_csv(w, &scan));
    let bare = synthesize_scan(&linewidth_scan(None, 5))?;
    write(&dir, "pcf_no_sidebands_raw.csv", |w| write_spectrum_csv(w, &bare));
    let ladder = synthesize_scan(&ladder_scan()?)?;
    write(&dir, "pcf_ladder_nm.csv", |w| write_spectrum_csv(w, &ladder));

    let (roc, depth) = ACTUATED_MIRROR;
    let quartic = synthesize_surface(&SurfaceConfig::new(roc, depth).with_quartic(-1e-6).with_noise(1.0, 7))?;
    write(&dir, "surface_r105_quartic.csv", |w| write_surface_csv(w, &quartic));
    let plain = synthesize_surface(&SurfaceConfig::new(roc, depth).with_noise(1.0, 8))?;
    write(&dir, "surface_r105.csv", |w| write_surface_csv(w, &plain));
    Ok(())
}
