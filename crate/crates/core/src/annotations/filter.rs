use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

const DEFAULT_TOML: &str = include_str!("default_filter.toml");

/// Accounts named on these lists pass the filter without a keyword match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Allowlists {
    pub politicians: Vec<String>,
    pub parties: Vec<String>,
    pub outlets: Vec<String>,
}

impl Allowlists {
    fn iter(&self) -> impl Iterator<Item = &String> {
        self.politicians.iter().chain(&self.parties).chain(&self.outlets)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluencerFilterConfig {
    /// Accounts need strictly more followers than this.
    pub follower_threshold: u64,
    /// Country or city names matched against the location field. Empty
    /// disables the location check.
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default = "yes")]
    pub keyword_filtering: bool,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub allowlists: Allowlists,
}

fn yes() -> bool {
    true
}

impl Default for InfluencerFilterConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TOML).expect("bundled filter config parses")
    }
}

impl InfluencerFilterConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.keyword_filtering && self.keywords.iter().all(|k| k.trim().is_empty()) {
            return Err(Error::ConfigError(
                "keyword filtering is enabled but the keyword list is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Canonical form for matching: decomposed, combining marks removed,
/// lower-cased, whitespace collapsed.
pub fn normalize_text(s: &str) -> String {
    let stripped: String = s.nfd().filter(|c| !is_combining_mark(*c)).collect();
    stripped.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub followers: u64,
    pub location: String,
    pub profile: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccountTable {
    pub accounts: Vec<Account>,
}

impl AccountTable {
    pub const REQUIRED: [&'static str; 4] = ["id", "followers", "location", "profile"];

    /// Reads a headed CSV with at least `id, followers, location, profile`
    /// and an optional `name` column.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let missing: Vec<&str> = Self::REQUIRED
            .iter()
            .copied()
            .filter(|c| !headers.iter().any(|h| h.trim() == *c))
            .collect();
        if !missing.is_empty() {
            return Err(Error::SchemaError(format!("accounts table lacks column(s): {}", missing.join(", "))));
        }
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let (id, fol, loc, prof, name) = (
            col("id").unwrap(),
            col("followers").unwrap(),
            col("location").unwrap(),
            col("profile").unwrap(),
            col("name"),
        );
        let mut accounts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let followers = rec[fol].trim().parse().map_err(|_| Error::ParseError {
                line,
                message: format!("follower count `{}` is not a non-negative integer", &rec[fol]),
            })?;
            accounts.push(Account {
                id: rec[id].trim().to_owned(),
                name: name.map(|i| rec[i].trim().to_owned()).filter(|s| !s.is_empty()),
                followers,
                location: rec[loc].to_owned(),
                profile: rec[prof].to_owned(),
            });
        }
        Ok(AccountTable { accounts })
    }
}

/// Ids of accounts with more followers than the threshold, a matching
/// location, and either a profile keyword or an allowlisted id or name.
pub fn filter_influencers(table: &AccountTable, config: &InfluencerFilterConfig) -> Result<BTreeSet<String>> {
    config.validate()?;
    let locations: Vec<String> = config
        .locations
        .iter()
        .map(|l| normalize_text(l))
        .filter(|l| !l.is_empty())
        .collect();
    let keywords: Vec<String> = config
        .keywords
        .iter()
        .map(|k| normalize_text(k))
        .filter(|k| !k.is_empty())
        .collect();
    let allowed: HashSet<String> = config.allowlists.iter().map(|a| normalize_text(a)).collect();

    let kept: BTreeSet<String> = table
        .accounts
        .iter()
        .filter(|a| a.followers > config.follower_threshold)
        .filter(|a| {
            let loc = normalize_text(&a.location);
            locations.is_empty() || locations.iter().any(|l| loc.contains(l.as_str()))
        })
        .filter(|a| {
            let listed = allowed.contains(&normalize_text(&a.id))
                || a.name.as_deref().is_some_and(|n| allowed.contains(&normalize_text(n)));
            if listed || !config.keyword_filtering {
                return true;
            }
            let profile = normalize_text(&a.profile);
            keywords.iter().any(|k| profile.contains(k.as_str()))
        })
        .map(|a| a.id.clone())
        .collect();
    log::info!("influencer filter kept {} of {} accounts", kept.len(), table.accounts.len());
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acct(id: &str, followers: u64, location: &str, profile: &str) -> Account {
        Account {
            id: id.into(),
            name: None,
            followers,
            location: location.into(),
            profile: profile.into(),
        }
    }

    #[test]
    fn default_config_loads() {
        let cfg = InfluencerFilterConfig::default();
        assert_eq!(cfg.follower_threshold, 1000);
        assert!(cfg.keywords.iter().any(|k| k == "política"));
        assert!(cfg.allowlists.politicians.iter().any(|p| p == "Jair Bolsonaro"));
    }

    #[test]
    fn threshold_is_strict() {
        let cfg = InfluencerFilterConfig::default();
        let t = AccountTable {
            accounts: vec![
                acct("a", 1000, "Brasil", "jornalista"),
                acct("b", 1001, "Brasil", "jornalista"),
            ],
        };
        assert_eq!(filter_influencers(&t, &cfg).unwrap(), BTreeSet::from(["b".to_owned()]));
    }

    #[test]
    fn keyword_and_allowlist() {
        let cfg = InfluencerFilterConfig::default();
        let mut pol = acct("JairBolsonaro", 1_000_000, "Brasília, DF", "pai, marido");
        pol.name = Some("Jair Bolsonaro".into());
        let t = AccountTable {
            accounts: vec![
                acct("j", 5000, "sao paulo", "Jornalista POLITICA"),
                pol,
                acct("x", 5000, "Brazil", "chef de cozinha"),
                acct("y", 5000, "Lisboa", "jornalista"),
            ],
        };
        let got = filter_influencers(&t, &cfg).unwrap();
        assert_eq!(got, BTreeSet::from(["JairBolsonaro".to_owned(), "j".to_owned()]));
    }

    #[test]
    fn accents_are_ignored() {
        assert_eq!(normalize_text("  Política   São  "), "politica sao");
    }

    #[test]
    fn empty_keywords_rejected() {
        let cfg = InfluencerFilterConfig {
            keywords: vec![],
            ..InfluencerFilterConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::ConfigError(_))));
    }

    #[test]
    fn schema_checked() {
        let csv = "id,followers,profile\na,10,x\n";
        assert!(matches!(AccountTable::from_csv(csv.as_bytes()), Err(Error::SchemaError(_))));
        let csv = "id,name,followers,location,profile\na,A,10,Rio,x\nb,,2000,Rio,y\n";
        let t = AccountTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.accounts.len(), 2);
        assert_eq!(t.accounts[0].name.as_deref(), Some("A"));
        assert_eq!(t.accounts[1].name, None);
        let csv = "id,followers,location,profile\na,many,Rio,x\n";
        assert!(matches!(
            AccountTable::from_csv(csv.as_bytes()),
            Err(Error::ParseError { line: 2, .. })
        ));
    }
}
