use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::adapt::LearnerConfig;
use crate::engine::UserProfile;
use crate::error::{Error, Result};
use crate::variables::Chronotype;

/// Directory of profile documents, one `<id>.json` per profile.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    dir: PathBuf,
}

impl ProfileStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn valid_id(id: &str) -> bool {
        !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
    }

    pub fn path_for(&self, id: &str) -> Result<PathBuf> {
        if !Self::valid_id(id) {
            return Err(Error::InvalidInput(format!("bad profile id `{id}`")));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Creates and persists a fresh profile under a new random id.
    pub fn create(&self, age: f64, chronotype: Chronotype, cfg: LearnerConfig) -> Result<UserProfile> {
        let id = loop {
            let id = format!("{:032x}", rand::rng().random::<u128>());
            if !self.path_for(&id)?.exists() {
                break id;
            }
        };
        let profile = UserProfile::new(id, age, chronotype, cfg)?;
        self.save(&profile)?;
        Ok(profile)
    }

    pub fn save(&self, profile: &UserProfile) -> Result<()> {
        profile.save(&self.path_for(&profile.profile_id)?)
    }

    /// `Ok(None)` when no such profile exists.
    pub fn load(&self, id: &str) -> Result<Option<UserProfile>> {
        let path = match self.path_for(id) {
            Ok(p) => p,
            Err(_) => return Ok(None),
        };
        if !path.exists() {
            return Ok(None);
        }
        UserProfile::load(&path).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProfileStore::open(dir.path()).unwrap();
        let a = store.create(22.0, Chronotype::Evening, LearnerConfig::default()).unwrap();
        let b = store.create(22.0, Chronotype::Evening, LearnerConfig::default()).unwrap();
        assert_ne!(a.profile_id, b.profile_id);
        assert_eq!(store.load(&a.profile_id).unwrap().unwrap(), a);
        assert!(store.load("missing").unwrap().is_none());
        assert!(store.load("../etc/passwd").unwrap().is_none());
    }
}
