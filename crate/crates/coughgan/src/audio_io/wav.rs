//! RIFF/WAVE decode and encode.
//!
//! Reads 16-bit signed PCM and IEEE 32-bit float, mono or stereo; stereo is
//! downmixed by per-sample channel average. Writes IEEE 32-bit float mono, so
//! a float-valued clip round-trips bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio signal; the unit of all DSP in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("audio samples must be finite".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

fn u16_at(data: &[u8], pos: usize) -> Result<u16> {
    data.get(pos..pos + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| Error::Format("truncated WAV header".into()))
}

fn u32_at(data: &[u8], pos: usize) -> Result<u32> {
    data.get(pos..pos + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("truncated WAV header".into()))
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&data)
}

pub fn decode_wav(data: &[u8]) -> Result<AudioClip> {
    if data.len() < 12 || &data[0..4] != b"RIFF" || &data[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }

    let mut format: Option<(u16, u16, u32, u16)> = None; // (code, channels, rate, bits)
    let mut payload: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= data.len() {
        let id = &data[pos..pos + 4];
        let size = u32_at(data, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= data.len())
            .ok_or_else(|| Error::Format("chunk size exceeds file".into()))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk too small".into()));
                }
                format = Some((
                    u16_at(data, body_start)?,
                    u16_at(data, body_start + 2)?,
                    u32_at(data, body_start + 4)?,
                    u16_at(data, body_start + 14)?,
                ));
            }
            b"data" => payload = Some(&data[body_start..body_end]),
            _ => {}
        }
        // chunks are word-aligned
        pos = body_end + (size & 1);
    }

    let (code, channels, rate, bits) =
        format.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let payload = payload.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if rate == 0 {
        return Err(Error::Format("zero sample rate".into()));
    }
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }

    let per_channel: Vec<f64> = match (code, bits) {
        (FORMAT_PCM, 16) => payload
            .chunks_exact(2)
            .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => payload
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect(),
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "format code {code} at {bits} bits"
            )))
        }
    };

    let samples = if channels == 1 {
        per_channel
    } else {
        per_channel
            .chunks_exact(2)
            .map(|f| (f[0] + f[1]) / 2.0)
            .collect()
    };
    AudioClip::new(samples, rate)
}

pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    let bytes = encode_wav(clip)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_wav(clip: &AudioClip) -> Result<Vec<u8>> {
    if clip.samples.iter().any(|&s| !(-1.0..=1.0).contains(&s)) {
        return Err(Error::Domain(
            "write_wav requires samples in [-1, 1]".into(),
        ));
    }
    let data_len = clip.samples.len() * 4;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate_hz * 4).to_le_bytes()); // byte rate
    out.extend_from_slice(&4u16.to_le_bytes()); // block align
    out.extend_from_slice(&32u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    Ok(out)
}

/// Encodes a clip as 16-bit PCM with the given channel layout. Test and
/// fixture helper; the pipeline itself always writes float.
pub fn encode_wav_pcm16(frames: &[Vec<i16>], sample_rate_hz: u32) -> Vec<u8> {
    let channels = frames.first().map_or(1, |f| f.len()) as u16;
    let data_len = frames.len() * channels as usize * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * u32::from(channels) * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for frame in frames {
        for &s in frame {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pcm16_max_code_maps_just_below_one() {
        let bytes = encode_wav_pcm16(&[vec![32767]], 44100);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.samples, vec![32767.0 / 32768.0]);
        assert_eq!(clip.sample_rate_hz, 44100);
    }

    #[test]
    fn stereo_downmix_is_channel_average() {
        let bytes = encode_wav_pcm16(&[vec![1000, -1000]], 48000);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.samples, vec![0.0]);
    }

    #[test]
    fn three_second_fixture_has_expected_length() {
        // duration x rate oracle: 3 s at 44100 Hz = 132300 samples
        let frames: Vec<Vec<i16>> = (0..132300).map(|i| vec![(i % 100) as i16]).collect();
        let bytes = encode_wav_pcm16(&frames, 44100);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.samples.len(), 132300);
        assert_eq!(clip.sample_rate_hz, 44100);
    }

    #[test]
    fn float_header_contract() {
        let clip = AudioClip::new(vec![0.5, -0.5], 12000).unwrap();
        let bytes = encode_wav(&clip).unwrap();
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back.sample_rate_hz, 12000);
        assert_eq!(back.samples.len(), 2);
        assert_eq!(back.samples, clip.samples);
    }

    #[test]
    fn zeros_round_trip() {
        let clip = AudioClip::new(vec![0.0; 100], 12000).unwrap();
        let back = decode_wav(&encode_wav(&clip).unwrap()).unwrap();
        assert_eq!(back, clip);
    }

    #[test]
    fn out_of_range_sample_is_a_domain_error() {
        let clip = AudioClip {
            samples: vec![1.5],
            sample_rate_hz: 8000,
        };
        assert!(matches!(encode_wav(&clip), Err(Error::Domain(_))));
    }

    #[test]
    fn malformed_header_is_a_format_error() {
        assert!(matches!(decode_wav(b"not a wav"), Err(Error::Format(_))));
        let mut bytes = encode_wav_pcm16(&[vec![0]], 8000);
        bytes[0] = b'X';
        assert!(matches!(decode_wav(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_encoding_is_reported() {
        // 8-bit PCM: patch bits-per-sample in a valid header
        let mut bytes = encode_wav_pcm16(&[vec![0]], 8000);
        bytes[34] = 8;
        assert!(matches!(
            decode_wav(&bytes),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    proptest! {
        /// write_wav then read_wav is the identity for f32-valued clips.
        #[test]
        fn float_round_trip_is_bit_exact(
            raw in proptest::collection::vec(-1.0f32..=1.0f32, 1..2000),
            rate in 1u32..96000,
        ) {
            let clip = AudioClip::new(raw.iter().map(|&x| f64::from(x)).collect(), rate).unwrap();
            let back = decode_wav(&encode_wav(&clip).unwrap()).unwrap();
            prop_assert_eq!(back.sample_rate_hz, clip.sample_rate_hz);
            prop_assert_eq!(back.samples, clip.samples);
        }
    }
}
