//! RIFF/WAVE ingestion and export.
//!
//! Integer PCM (16/24/32 bit) and 32-bit float are read through `hound`.
//! `hound` refuses 64-bit float files, so those go through a small chunk
//! walker below.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xfffe;
const MIN_SAMPLE_RATE: u32 = 8000;

/// Reads a mono WAVE file. Multi-channel files are rejected.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let (channels, buffer) = read_interleaved(path.as_ref())?;
    if channels != 1 {
        return Err(Error::MultiChannelInput { channels });
    }
    Ok(buffer)
}

/// Reads one channel of a (possibly multi-channel) WAVE file.
pub fn load_audio_channel(path: impl AsRef<Path>, channel: u16) -> Result<AudioBuffer> {
    let (channels, interleaved) = read_interleaved(path.as_ref())?;
    if channel >= channels {
        return Err(Error::ChannelOutOfRange { requested: channel, channels });
    }
    let samples = interleaved
        .samples
        .iter()
        .skip(channel as usize)
        .step_by(channels as usize)
        .copied()
        .collect();
    Ok(AudioBuffer::new(samples, interleaved.sample_rate))
}

/// Writes a buffer as 32-bit float mono WAVE.
pub fn write_wav_f32(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(hound_error)?;
    for &s in &buffer.samples {
        writer.write_sample(s as f32).map_err(hound_error)?;
    }
    writer.finalize().map_err(hound_error)
}

/// Writes a buffer as 16-bit integer mono WAVE, clipping to full scale.
pub fn write_wav_i16(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(hound_error)?;
    for &s in &buffer.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(hound_error)?;
    }
    writer.finalize().map_err(hound_error)
}

fn read_interleaved(path: &Path) -> Result<(u16, AudioBuffer)> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    let (channels, buffer) = match WavReader::new(bytes.as_slice()) {
        Ok(reader) => decode_with_hound(reader)?,
        Err(hound_err) => match read_f64_wave(&bytes)? {
            Some(decoded) => decoded,
            None => return Err(hound_error(hound_err)),
        },
    };
    if buffer.sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::UnsupportedFormat(format!(
            "sample rate {} Hz below {} Hz",
            buffer.sample_rate, MIN_SAMPLE_RATE
        )));
    }
    if buffer.samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::UnsupportedFormat("non-finite sample values".into()));
    }
    Ok((channels, buffer))
}

fn decode_with_hound<R: std::io::Read>(reader: WavReader<R>) -> Result<(u16, AudioBuffer)> {
    let spec = reader.spec();
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(hound_error)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(hound_error)?
        }
        (format, bits) => {
            return Err(Error::UnsupportedFormat(format!("{format:?} with {bits} bits")))
        }
    };
    Ok((spec.channels, AudioBuffer::new(samples, spec.sample_rate)))
}

/// Decodes 64-bit IEEE float WAVE data. Returns `Ok(None)` when the file is
/// not a 64-bit float WAVE so the caller can surface the original error.
fn read_f64_wave(bytes: &[u8]) -> Result<Option<(u16, AudioBuffer)>> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Ok(None);
    }
    let u16_at = |b: &[u8], i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
    let u32_at = |b: &[u8], i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);

    let mut fmt: Option<(u16, u32)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body.saturating_add(len).min(bytes.len());
        match id {
            b"fmt " if end - body >= 16 => {
                let tag = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let rate = u32_at(bytes, body + 4);
                let bits = u16_at(bytes, body + 14);
                let is_float = tag == FORMAT_IEEE_FLOAT
                    || (tag == FORMAT_EXTENSIBLE && end - body >= 26 && u16_at(bytes, body + 24) == FORMAT_IEEE_FLOAT);
                if !is_float || bits != 64 {
                    return Ok(None);
                }
                if channels == 0 {
                    return Err(Error::UnsupportedFormat("zero channels".into()));
                }
                fmt = Some((channels, rate));
            }
            b"data" => {
                let Some((channels, rate)) = fmt else {
                    return Err(Error::UnsupportedFormat("data chunk before fmt chunk".into()));
                };
                let samples = bytes[body..end]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                    .collect();
                return Ok(Some((channels, AudioBuffer::new(samples, rate))));
            }
            _ => {}
        }
        // Chunks are padded to even length.
        pos = body + len + (len & 1);
    }
    Ok(None)
}

fn hound_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_i16(path: &Path, channels: u16, samples: &[i16]) {
        let spec = WavSpec { channels, sample_rate: 48000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    fn write_f64_wave(path: &Path, rate: u32, samples: &[f64]) {
        let data_len = (samples.len() * 8) as u32;
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data_len).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&rate.to_le_bytes());
        b.extend_from_slice(&(rate * 8).to_le_bytes());
        b.extend_from_slice(&8u16.to_le_bytes());
        b.extend_from_slice(&64u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&data_len.to_le_bytes());
        for s in samples {
            b.extend_from_slice(&s.to_le_bytes());
        }
        fs::write(path, b).unwrap();
    }

    #[test]
    fn reads_three_sample_float_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("three.wav");
        write_wav_f32(&path, &AudioBuffer::new(vec![0.0, 1.0, 0.0], 48000)).unwrap();
        let buf = load_audio(&path).unwrap();
        assert_eq!(buf.samples, vec![0.0, 1.0, 0.0]);
        assert_eq!(buf.sample_rate, 48000);
        assert_eq!(buf.calibration_offset, None);
    }

    #[test]
    fn int16_full_scale_maps_below_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm16.wav");
        write_i16(&path, 1, &[32767, -32768, 0]);
        let buf = load_audio(&path).unwrap();
        assert_eq!(buf.samples[0], 32767.0 / 32768.0);
        assert!((buf.samples[0] - 0.99997).abs() < 1e-5);
        assert_eq!(buf.samples[1], -1.0);
    }

    #[test]
    fn stereo_is_rejected_but_channel_can_be_selected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        write_i16(&path, 2, &[100, -100, 200, -200]);
        assert!(matches!(load_audio(&path), Err(Error::MultiChannelInput { channels: 2 })));
        let right = load_audio_channel(&path, 1).unwrap();
        assert_eq!(right.samples, vec![-100.0 / 32768.0, -200.0 / 32768.0]);
        assert!(matches!(load_audio_channel(&path, 2), Err(Error::ChannelOutOfRange { .. })));
    }

    #[test]
    fn reads_64_bit_float() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f64.wav");
        write_f64_wave(&path, 44100, &[0.25, -0.5, 1.0e-9]);
        let buf = load_audio(&path).unwrap();
        assert_eq!(buf.samples, vec![0.25, -0.5, 1.0e-9]);
        assert_eq!(buf.sample_rate, 44100);
    }

    #[test]
    fn reads_24_bit_pcm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm24.wav");
        let spec = WavSpec { channels: 1, sample_rate: 96000, bits_per_sample: 24, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(4_194_304i32).unwrap();
        w.finalize().unwrap();
        assert_eq!(load_audio(&path).unwrap().samples, vec![0.5]);
    }

    #[test]
    fn missing_and_garbage_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_audio(dir.path().join("nope.wav")), Err(Error::FileNotFound(_))));
        let junk = dir.path().join("junk.wav");
        fs::write(&junk, b"not a wave file at all").unwrap();
        assert!(matches!(load_audio(&junk), Err(Error::UnsupportedFormat(_))));
    }
}
