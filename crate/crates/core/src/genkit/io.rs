//! Streams backed by files and child processes.
//!
//! Both carry raw little-endian unsigned 32-bit words with no framing.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Stdio};

use super::{GenkitError, RandomStream, SeedableStream, StreamError};

/// Environment variable carrying the seed to external generators.
pub const SEED_ENV: &str = "RNGTS_SEED";

fn read_word<R: Read>(reader: &mut R) -> Result<u64, StreamError> {
    let mut buf = [0u8; 4];
    match reader.read_exact(&mut buf) {
        Ok(()) => Ok(u32::from_le_bytes(buf) as u64),
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => Err(StreamError::Exhausted),
        Err(e) => Err(StreamError::Io(e.to_string())),
    }
}

/// Binary file of little-endian `u32` words. Seeding rewinds to the start.
#[derive(Debug)]
pub struct FileStream {
    path: PathBuf,
    reader: BufReader<File>,
    name: String,
}

impl FileStream {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GenkitError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path)?;
        let len = file.metadata()?.len();
        if len % 4 != 0 {
            return Err(GenkitError::Format {
                path: path.display().to_string(),
                reason: format!("length {len} is not a multiple of 4 bytes"),
            });
        }
        let name = format!("file:{}", path.display());
        Ok(Self { path, reader: BufReader::new(file), name })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl RandomStream for FileStream {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        read_word(&mut self.reader)
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        u32::MAX as u64
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl SeedableStream for FileStream {
    fn seed(&mut self, _seed: u64) {
        // A failed rewind surfaces as an I/O error on the next draw.
        let _ = self.reader.seek(SeekFrom::Start(0));
    }
}

/// Writes words as little-endian `u32`, the format [`FileStream`] reads.
pub fn write_words(path: impl AsRef<Path>, words: &[u32]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for w in words {
        out.write_all(&w.to_le_bytes())?;
    }
    out.flush()
}

/// A child process writing little-endian `u32` words to standard output.
///
/// The seed is passed through the `RNGTS_SEED` environment variable;
/// seeding restarts the child. Termination of the child exhausts the stream.
pub struct ExternalStream {
    command: Vec<String>,
    child: Option<(Child, BufReader<ChildStdout>)>,
    seed: Option<u64>,
    name: String,
}

impl std::fmt::Debug for ExternalStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalStream").field("command", &self.command).field("seed", &self.seed).finish()
    }
}

impl ExternalStream {
    /// Spawns the command immediately so that a missing executable is a
    /// configuration error rather than a mid-run abort.
    pub fn spawn(command: Vec<String>) -> Result<Self, GenkitError> {
        if command.is_empty() {
            return Err(GenkitError::Config("external generator command is empty".into()));
        }
        let name = format!("external:{}", command.join(" "));
        let mut s = Self { command, child: None, seed: None, name };
        s.child = Some(s.start()?);
        Ok(s)
    }

    fn start(&self) -> Result<(Child, BufReader<ChildStdout>), GenkitError> {
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..]).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::null());
        if let Some(seed) = self.seed {
            cmd.env(SEED_ENV, seed.to_string());
        }
        let mut child = cmd.spawn().map_err(|source| GenkitError::Spawn { command: self.command.join(" "), source })?;
        let stdout = child.stdout.take().expect("stdout is piped");
        Ok((child, BufReader::new(stdout)))
    }

    fn stop(&mut self) {
        if let Some((mut child, _)) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Drop for ExternalStream {
    fn drop(&mut self) {
        self.stop();
    }
}

impl RandomStream for ExternalStream {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        if self.child.is_none() {
            let started = self.start().map_err(|e| StreamError::Io(e.to_string()))?;
            self.child = Some(started);
        }
        let (_, reader) = self.child.as_mut().expect("child started");
        read_word(reader)
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        u32::MAX as u64
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl SeedableStream for ExternalStream {
    fn seed(&mut self, seed: u64) {
        self.stop();
        self.seed = Some(seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genkit::Mt19937;

    #[test]
    fn file_byte_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("words.bin");
        std::fs::write(&path, [1, 0, 0, 0, 0xff, 0xff, 0xff, 0xff]).unwrap();
        let mut s = FileStream::open(&path).unwrap();
        assert_eq!(s.next_raw().unwrap(), 1);
        assert_eq!(s.next_raw().unwrap(), 4_294_967_295);
        assert_eq!(s.next_raw(), Err(StreamError::Exhausted));
    }

    #[test]
    fn empty_file_exhausts_immediately() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.bin");
        std::fs::write(&path, []).unwrap();
        let mut s = FileStream::open(&path).unwrap();
        assert_eq!(s.next_raw(), Err(StreamError::Exhausted));
    }

    #[test]
    fn trailing_bytes_are_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.bin");
        std::fs::write(&path, [1, 2, 3, 4, 5]).unwrap();
        assert!(matches!(FileStream::open(&path), Err(GenkitError::Format { .. })));
    }

    #[test]
    fn mt19937_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mt.bin");
        let mut g = Mt19937::new(331);
        let words: Vec<u32> = (0..10_000).map(|_| g.next_u32()).collect();
        write_words(&path, &words).unwrap();
        let mut s = FileStream::open(&path).unwrap();
        for &w in &words {
            assert_eq!(s.next_raw().unwrap(), w as u64);
        }
        assert_eq!(s.next_raw(), Err(StreamError::Exhausted));
        s.seed(0);
        assert_eq!(s.next_raw().unwrap(), words[0] as u64);
    }

    #[test]
    fn missing_command_is_a_config_error() {
        let r = ExternalStream::spawn(vec!["/nonexistent/rngts-generator".into()]);
        assert!(matches!(r, Err(GenkitError::Spawn { .. })));
        assert!(ExternalStream::spawn(vec![]).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn child_output_then_exhaustion() {
        let cmd = vec!["sh".into(), "-c".into(), r"printf '\001\000\000\000'".into()];
        let mut s = ExternalStream::spawn(cmd).unwrap();
        assert_eq!(s.next_raw().unwrap(), 1);
        assert_eq!(s.next_raw(), Err(StreamError::Exhausted));
    }

    #[cfg(unix)]
    #[test]
    fn child_receives_seed() {
        // emits the seed's low byte as a single word
        let script = r#"printf "\\$(printf '%03o' "$RNGTS_SEED")\000\000\000""#;
        let mut s = ExternalStream::spawn(vec!["sh".into(), "-c".into(), script.into()]).unwrap();
        s.seed(65);
        assert_eq!(s.next_raw().unwrap(), 65);
        s.seed(66);
        assert_eq!(s.next_raw().unwrap(), 66);
    }
}
