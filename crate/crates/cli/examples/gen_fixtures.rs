//! Regenerates the synthetic fixture sessions under `fixtures/`.
//!
//! Every impulse response is a sum of exponentially decaying tones, one per
//! octave center, so each band's reverberation time is known exactly. The
//! meeting-room pair is constructed so that treatment shortens the 125 Hz
//! band by about 40 % and raises with-noise STI by 0.06 to 0.09 per
//! position. These are constructed test data, not measurements.
//!
//! ```text
//! cargo run -p roomacoustics-cli --example gen_fixtures [out_dir]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use roomacoustics::signal::{write_wav_f32, write_wav_i16, AudioBuffer, BandDefinition};
use roomacoustics::synth::{band_noise, multitone_ir};

const RATE: u32 = 48000;
const PRE_DELAY: f64 = 0.01;
const OCTAVES: [f64; 8] = [63.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

const UNTREATED_T: [f64; 8] = [1.10, 1.05, 0.85, 0.72, 0.66, 0.62, 0.56, 0.46];
const TREATED_T: [f64; 8] = [0.78, 0.63, 0.52, 0.45, 0.43, 0.42, 0.40, 0.35];

/// Projector and HVAC noise at the STI octaves and the 63 Hz band, dB SPL.
const ROOM_NOISE: [f64; 8] = [36.0, 31.0, 27.0, 24.0, 21.0, 18.0, 15.0, 12.0];
const NOISE_SECONDS: f64 = 5.0;
const CALIBRATION_DB: f64 = 80.0;

/// Label, distance (m), per-position T scale.
type Receiver = (&'static str, f64, f64);

const LAYOUT: [(&str, [Receiver; 4]); 3] = [
    ("S1", [("M1", 2.1, 1.00), ("M2", 3.4, 1.02), ("M3", 4.6, 0.98), ("M4", 5.8, 1.03)]),
    ("S2", [("M1", 3.0, 0.99), ("M2", 2.4, 1.01), ("M3", 5.2, 1.02), ("M4", 4.1, 0.97)]),
    ("S3", [("M1", 4.4, 1.01), ("M2", 5.5, 0.98), ("M3", 2.8, 1.00), ("M4", 3.6, 1.02)]),
];

fn exact(center: f64) -> f64 {
    BandDefinition::room_octaves().exact_center(center)
}

fn ir(t: &[f64; 8], scale: f64, seed: u64) -> AudioBuffer {
    let tones: Vec<(f64, f64)> = OCTAVES.iter().zip(t).map(|(&c, &t)| (exact(c), t * scale)).collect();
    let longest = t.iter().cloned().fold(0.0, f64::max) * scale;
    let mut buffer = multitone_ir(&tones, (2.5 * longest).max(1.0), RATE, PRE_DELAY, seed).unwrap();
    // headroom for 16-bit storage
    let peak = buffer.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    buffer.samples.iter_mut().for_each(|v| *v *= 0.9 / peak);
    buffer
}

fn flat_ir(t60: f64, seed: u64) -> AudioBuffer {
    ir(&[t60; 8], 1.0, seed)
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn header(id: &str, condition: &str, usage: &str, extra: &str) -> String {
    format!(
        "schema_version = 1\n\n[session]\nid = \"{id}\"\ncondition = \"{condition}\"\nvolume_m3 = 150.8\nusage = \"{usage}\"\n{extra}"
    )
}

fn receiver(label: &str, file: &str, distance: f64) -> String {
    format!("\n[[scenario.receiver]]\nlabel = \"{label}\"\nir_file = \"{file}\"\ndistance_m = {distance}\n")
}

fn simple_session(root: &Path, name: &str, t60: f64, noise: Option<f64>, extra: &str) {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    let mut text = header(name, "other", "hybrid_meeting", extra);
    text.push_str("\n[[scenario]]\nsource = \"S1\"\n");
    if let Some(level) = noise {
        let rec = band_noise(&OCTAVES.map(exact), &[level; 8], CALIBRATION_DB, NOISE_SECONDS, RATE, 99).unwrap();
        write_wav_i16(dir.join("noise.wav"), &rec).unwrap();
        text.push_str(&format!(
            "noise = {{ file = \"noise.wav\", calibration_offset_db = {CALIBRATION_DB:.1}, duration_s = {NOISE_SECONDS:.1} }}\n"
        ));
    }
    for (i, (label, distance)) in [("M1", 2.0), ("M2", 4.0)].into_iter().enumerate() {
        let file = format!("{}.wav", label.to_lowercase());
        write_wav_i16(dir.join(&file), &flat_ir(t60, 10 + i as u64)).unwrap();
        text.push_str(&receiver(label, &file, distance));
    }
    write(&dir, "session.toml", &text);
}

fn meeting_session(root: &Path, condition: &str, t: &[f64; 8]) {
    let name = format!("meeting_{condition}");
    let dir = root.join(&name);
    fs::create_dir_all(&dir).unwrap();
    let surfaces = "\n[room.surfaces]\nceiling = 55.0\nwalls = 98.0\nrear_wall = 18.5\n";
    let mut text = header(&format!("meeting-{condition}"), condition, "hybrid_meeting", surfaces);
    for (s, (source, receivers)) in LAYOUT.iter().enumerate() {
        text.push_str(&format!(
            "\n[[scenario]]\nsource = \"{source}\"\nnoise = {{ file = \"../meeting_noise.wav\", calibration_offset_db = {CALIBRATION_DB:.1}, duration_s = {NOISE_SECONDS:.1} }}\n"
        ));
        for (r, (label, distance, scale)) in receivers.iter().enumerate() {
            let file = format!("{}_{}.wav", source.to_lowercase(), label.to_lowercase());
            let seed = 100 + 10 * s as u64 + r as u64;
            write_wav_i16(dir.join(&file), &ir(t, *scale, seed)).unwrap();
            text.push_str(&receiver(label, &file, *distance));
        }
    }
    write(&dir, "session.toml", &text);
}

fn main() {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&root).unwrap();

    // ideal channel: a single unit impulse
    let ideal = root.join("ideal");
    fs::create_dir_all(&ideal).unwrap();
    let mut impulse = vec![0.0; RATE as usize];
    impulse[(PRE_DELAY * RATE as f64) as usize] = 1.0;
    write_wav_f32(ideal.join("impulse.wav"), &AudioBuffer::new(impulse, RATE)).unwrap();
    let mut text = header("ideal", "other", "hybrid_meeting", "\n[options]\nsti_noise = false\n");
    text.push_str("\n[[scenario]]\nsource = \"S1\"\n");
    text.push_str(&receiver("M1", "impulse.wav", 1.0));
    write(&ideal, "session.toml", &text);

    simple_session(&root, "decay_0p5", 0.5, None, "");
    simple_session(&root, "decay_0p6_noise", 0.6, Some(50.0), "");
    simple_session(&root, "compliant_0p45", 0.45, None, "");
    let surfaces = "\n[room.surfaces]\nceiling = 55.0\nwalls = 98.0\nrear_wall = 18.5\n";
    simple_session(&root, "advise_0p65", 0.65, None, surfaces);

    let noise = band_noise(&OCTAVES.map(exact), &ROOM_NOISE, CALIBRATION_DB, NOISE_SECONDS, RATE, 7).unwrap();
    write_wav_i16(root.join("meeting_noise.wav"), &noise).unwrap();
    meeting_session(&root, "untreated", &UNTREATED_T);
    meeting_session(&root, "treated", &TREATED_T);
    println!("fixtures written to {}", root.display());
}
