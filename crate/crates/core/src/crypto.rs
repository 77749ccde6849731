//! Cryptographic primitives used by the escrow protocol.
//!
//! Three operations matter to the protocol: the product hash the contract is
//! deployed with, the seller-authenticated envelope that binds the product to
//! a contract nonce, and the buyer-confidential envelope that carries the
//! authenticated envelope over the off-chain channel.
//!
//! The "encryption with a private key" layer is a publicly recoverable signed
//! encapsulation: the payload travels in the clear next to a signature over
//! it, and opening means verify-then-extract. Anyone holding the seller's
//! public key recovers `(d, ID)` and learns that the seller produced it.
//!
//! [`StandardSuite`] is the default backend:
//!
//! | primitive        | construction                                      |
//! |------------------|---------------------------------------------------|
//! | hash             | SHA-256                                           |
//! | signed envelope  | Ed25519 over a domain-tagged payload              |
//! | sealed envelope  | X25519 ECDH + SHA-256 KDF + ChaCha20-Poly1305     |
//!
//! Every operation is a pure function of its inputs. The sealed envelope's
//! ephemeral key is derived from the recipient key and plaintext, so the same
//! inputs always yield the same bytes and transcripts replay exactly.

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Name of the hash function, recorded in every transcript header.
pub const HASH_ALGORITHM: &str = "SHA-256";
pub const SIGNATURE_SCHEME: &str = "Ed25519";
pub const SEAL_SCHEME: &str = "X25519-SHA256-ChaCha20Poly1305";

pub const DIGEST_LEN: usize = 32;
pub const SEED_LEN: usize = 32;
/// Ed25519 verifying key followed by the X25519 public key.
pub const PUBLIC_KEY_LEN: usize = 64;
pub const PRIVATE_KEY_LEN: usize = 32;
const SIGNATURE_LEN: usize = 64;
const LEN_PREFIX: usize = 4;
const NONCE_LEN: usize = 8;
const EPHEMERAL_LEN: usize = 32;
const AEAD_TAG_LEN: usize = 16;

const SIGN_DOMAIN: &[u8] = b"escrow/signed-envelope/v1";
const X25519_DOMAIN: &[u8] = b"escrow/x25519-secret/v1";
const EPHEMERAL_DOMAIN: &[u8] = b"escrow/sealed-ephemeral/v1";
const SEAL_KDF_DOMAIN: &[u8] = b"escrow/sealed-key/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("malformed key: {0}")]
    MalformedKey(&'static str),
    #[error("envelope failed authentication")]
    Authentication,
    #[error("envelope could not be decrypted")]
    Decryption,
    #[error("product of {0} bytes exceeds the 4-byte length prefix")]
    Oversize(usize),
    #[error("binding parse error: {0}")]
    Parse(&'static str),
}

/// A 32-byte hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::Parse("digest is not hex"))?;
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::Parse("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// An asymmetric key pair. Both halves are opaque to callers; only the
/// provider that generated them interprets the bytes.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    #[serde(with = "crate::hexser")]
    pub public_key: Vec<u8>,
    #[serde(with = "crate::hexser")]
    pub private_key: Vec<u8>,
    pub owner_tag: String,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("owner_tag", &self.owner_tag)
            .field("public_key", &hex::encode(&self.public_key))
            .finish_non_exhaustive()
    }
}

/// Seller-authenticated envelope: the payload plus a tag over it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedEnvelope {
    #[serde(with = "crate::hexser")]
    pub payload: Vec<u8>,
    #[serde(with = "crate::hexser")]
    pub authenticity_tag: Vec<u8>,
}

impl SignedEnvelope {
    /// Wire layout: 4-byte big-endian payload length, payload, tag.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(LEN_PREFIX + self.payload.len() + self.authenticity_tag.len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.authenticity_tag);
        out
    }

    /// Splits wire bytes into payload and tag without verifying anything.
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let prefix: [u8; LEN_PREFIX] = bytes.get(..LEN_PREFIX)?.try_into().ok()?;
        let len = u32::from_be_bytes(prefix) as usize;
        let rest = &bytes[LEN_PREFIX..];
        if rest.len() != len.checked_add(SIGNATURE_LEN)? {
            return None;
        }
        Some(SignedEnvelope {
            payload: rest[..len].to_vec(),
            authenticity_tag: rest[len..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedEnvelope {
    #[serde(with = "crate::hexser")]
    pub ciphertext: Vec<u8>,
}

/// The product `d` bound to a contract nonce `ID`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductBinding {
    #[serde(with = "crate::hexser")]
    pub product_bytes: Vec<u8>,
    pub contract_nonce: u64,
}

/// Canonical layout: `len(d)` as u32 BE, `d`, nonce as u64 BE.
pub fn encode_binding(binding: &ProductBinding) -> Result<Vec<u8>, CryptoError> {
    let len = u32::try_from(binding.product_bytes.len())
        .map_err(|_| CryptoError::Oversize(binding.product_bytes.len()))?;
    let mut out = Vec::with_capacity(LEN_PREFIX + binding.product_bytes.len() + NONCE_LEN);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&binding.product_bytes);
    out.extend_from_slice(&binding.contract_nonce.to_be_bytes());
    Ok(out)
}

pub fn decode_binding(bytes: &[u8]) -> Result<ProductBinding, CryptoError> {
    let prefix: [u8; LEN_PREFIX] = bytes
        .get(..LEN_PREFIX)
        .and_then(|p| p.try_into().ok())
        .ok_or(CryptoError::Parse("missing length prefix"))?;
    let len = u32::from_be_bytes(prefix) as usize;
    let body = &bytes[LEN_PREFIX..];
    if body.len() != len + NONCE_LEN {
        return Err(CryptoError::Parse("length prefix does not match input"));
    }
    let (product, nonce) = body.split_at(len);
    let nonce: [u8; NONCE_LEN] = nonce.try_into().expect("split at checked length");
    Ok(ProductBinding {
        product_bytes: product.to_vec(),
        contract_nonce: u64::from_be_bytes(nonce),
    })
}

/// The protocol's crypto interface. Implementations must be deterministic.
pub trait CryptoProvider: Send + Sync {
    /// Human-readable name of the hash algorithm, recorded in transcripts.
    fn hash_algorithm(&self) -> &'static str;
    fn hash(&self, data: &[u8]) -> Digest;
    fn keygen(&self, seed: &[u8; SEED_LEN], owner_tag: &str) -> KeyPair;
    fn sign_seal(&self, private_key: &[u8], message: &[u8]) -> Result<SignedEnvelope, CryptoError>;
    /// Accepts arbitrary bytes. Any failure is what the contract calls garbage.
    fn open_signed(&self, public_key: &[u8], envelope: &[u8]) -> Result<Vec<u8>, CryptoError>;
    fn conf_seal(&self, public_key: &[u8], inner: &[u8]) -> Result<SealedEnvelope, CryptoError>;
    fn conf_open(&self, private_key: &[u8], sealed: &[u8]) -> Result<Vec<u8>, CryptoError>;
}

/// SHA-256 / Ed25519 / X25519+ChaCha20-Poly1305.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StandardSuite;

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn private_seed(private_key: &[u8]) -> Result<[u8; PRIVATE_KEY_LEN], CryptoError> {
    private_key
        .try_into()
        .map_err(|_| CryptoError::MalformedKey("private key must be 32 bytes"))
}

fn split_public(public_key: &[u8]) -> Result<(&[u8], &[u8]), CryptoError> {
    if public_key.len() != PUBLIC_KEY_LEN {
        return Err(CryptoError::MalformedKey("public key must be 64 bytes"));
    }
    Ok(public_key.split_at(32))
}

fn x25519_secret(seed: &[u8; PRIVATE_KEY_LEN]) -> x25519_dalek::StaticSecret {
    x25519_dalek::StaticSecret::from(sha256(&[X25519_DOMAIN, seed]))
}

fn seal_cipher(shared: &[u8; 32], ephemeral: &[u8], recipient: &[u8]) -> ChaCha20Poly1305 {
    let key = sha256(&[SEAL_KDF_DOMAIN, shared, ephemeral, recipient]);
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

impl CryptoProvider for StandardSuite {
    fn hash_algorithm(&self) -> &'static str {
        HASH_ALGORITHM
    }

    fn hash(&self, data: &[u8]) -> Digest {
        Digest(sha256(&[data]))
    }

    fn keygen(&self, seed: &[u8; SEED_LEN], owner_tag: &str) -> KeyPair {
        let signing = SigningKey::from_bytes(seed);
        let x_pub = x25519_dalek::PublicKey::from(&x25519_secret(seed));
        let mut public_key = Vec::with_capacity(PUBLIC_KEY_LEN);
        public_key.extend_from_slice(signing.verifying_key().as_bytes());
        public_key.extend_from_slice(x_pub.as_bytes());
        KeyPair {
            public_key,
            private_key: seed.to_vec(),
            owner_tag: owner_tag.to_owned(),
        }
    }

    fn sign_seal(&self, private_key: &[u8], message: &[u8]) -> Result<SignedEnvelope, CryptoError> {
        if u32::try_from(message.len()).is_err() {
            return Err(CryptoError::Oversize(message.len()));
        }
        let signing = SigningKey::from_bytes(&private_seed(private_key)?);
        let sig = signing.sign(&[SIGN_DOMAIN, message].concat());
        Ok(SignedEnvelope {
            payload: message.to_vec(),
            authenticity_tag: sig.to_bytes().to_vec(),
        })
    }

    fn open_signed(&self, public_key: &[u8], envelope: &[u8]) -> Result<Vec<u8>, CryptoError> {
        let (ed_pub, _) = split_public(public_key)?;
        let ed_pub: [u8; 32] = ed_pub.try_into().expect("split at 32");
        let verifying = VerifyingKey::from_bytes(&ed_pub)
            .map_err(|_| CryptoError::MalformedKey("invalid Ed25519 point"))?;
        let env = SignedEnvelope::from_bytes(envelope).ok_or(CryptoError::Authentication)?;
        let sig = Signature::from_slice(&env.authenticity_tag).map_err(|_| CryptoError::Authentication)?;
        verifying
            .verify(&[SIGN_DOMAIN, &env.payload].concat(), &sig)
            .map_err(|_| CryptoError::Authentication)?;
        Ok(env.payload)
    }

    fn conf_seal(&self, public_key: &[u8], inner: &[u8]) -> Result<SealedEnvelope, CryptoError> {
        let (_, x_pub) = split_public(public_key)?;
        let x_pub: [u8; 32] = x_pub.try_into().expect("split at 32");
        let recipient = x25519_dalek::PublicKey::from(x_pub);
        let eph_secret =
            x25519_dalek::StaticSecret::from(sha256(&[EPHEMERAL_DOMAIN, public_key, inner]));
        let eph_public = x25519_dalek::PublicKey::from(&eph_secret);
        let shared = eph_secret.diffie_hellman(&recipient);
        if !shared.was_contributory() {
            return Err(CryptoError::MalformedKey("low-order X25519 public key"));
        }
        let cipher = seal_cipher(shared.as_bytes(), eph_public.as_bytes(), &x_pub);
        let body = cipher
            .encrypt(Nonce::from_slice(&[0u8; 12]), inner)
            .map_err(|_| CryptoError::Decryption)?;
        let mut ciphertext = Vec::with_capacity(EPHEMERAL_LEN + body.len());
        ciphertext.extend_from_slice(eph_public.as_bytes());
        ciphertext.extend_from_slice(&body);
        Ok(SealedEnvelope { ciphertext })
    }

    fn conf_open(&self, private_key: &[u8], sealed: &[u8]) -> Result<Vec<u8>, CryptoError> {
        let secret = x25519_secret(&private_seed(private_key)?);
        let own_public = x25519_dalek::PublicKey::from(&secret);
        if sealed.len() < EPHEMERAL_LEN + AEAD_TAG_LEN {
            return Err(CryptoError::Decryption);
        }
        let (eph, body) = sealed.split_at(EPHEMERAL_LEN);
        let eph: [u8; 32] = eph.try_into().expect("split at 32");
        let shared = secret.diffie_hellman(&x25519_dalek::PublicKey::from(eph));
        if !shared.was_contributory() {
            return Err(CryptoError::Decryption);
        }
        seal_cipher(shared.as_bytes(), &eph, own_public.as_bytes())
            .decrypt(Nonce::from_slice(&[0u8; 12]), body)
            .map_err(|_| CryptoError::Decryption)
    }
}

// Convenience wrappers over the default suite.

pub fn hash(data: &[u8]) -> Digest {
    StandardSuite.hash(data)
}

pub fn keygen(seed: &[u8; SEED_LEN], owner_tag: &str) -> KeyPair {
    StandardSuite.keygen(seed, owner_tag)
}

pub fn sign_seal(private_key: &[u8], message: &[u8]) -> Result<SignedEnvelope, CryptoError> {
    StandardSuite.sign_seal(private_key, message)
}

pub fn open_signed(public_key: &[u8], envelope: &[u8]) -> Result<Vec<u8>, CryptoError> {
    StandardSuite.open_signed(public_key, envelope)
}

pub fn conf_seal(public_key: &[u8], inner: &[u8]) -> Result<SealedEnvelope, CryptoError> {
    StandardSuite.conf_seal(public_key, inner)
}

pub fn conf_open(private_key: &[u8], sealed: &[u8]) -> Result<Vec<u8>, CryptoError> {
    StandardSuite.conf_open(private_key, sealed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn pair(byte: u8) -> KeyPair {
        keygen(&[byte; 32], "t")
    }

    #[test]
    fn empty_input_digest_matches_published_vector() {
        assert_eq!(
            hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn distinct_inputs_hash_distinctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut inputs = HashSet::new();
        while inputs.len() < 1000 {
            let len = rng.random_range(0..64);
            let mut buf = vec![0u8; len];
            rng.fill_bytes(&mut buf);
            inputs.insert(buf);
        }
        let digests: HashSet<_> = inputs.iter().map(|d| hash(d)).collect();
        assert_eq!(digests.len(), 1000);
    }

    #[test]
    fn binding_layout_is_exact() {
        let b = ProductBinding { product_bytes: vec![0xAB], contract_nonce: 7 };
        assert_eq!(
            encode_binding(&b).unwrap(),
            vec![0, 0, 0, 1, 0xAB, 0, 0, 0, 0, 0, 0, 0, 7]
        );
    }

    #[test]
    fn malformed_length_prefixes_are_parse_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rejected = 0;
        for _ in 0..1000 {
            let mut buf = [0u8; 13];
            rng.fill_bytes(&mut buf);
            // only a prefix of exactly 1 describes a 13-byte input
            if u32::from_be_bytes(buf[..4].try_into().unwrap()) == 1 {
                continue;
            }
            assert!(matches!(decode_binding(&buf), Err(CryptoError::Parse(_))));
            rejected += 1;
        }
        assert!(rejected > 990);
        assert!(decode_binding(&[0, 0, 0]).is_err());
        assert!(decode_binding(&[]).is_err());
    }

    #[test]
    fn keygen_is_deterministic_and_seed_sensitive() {
        assert_eq!(pair(1), pair(1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let mut s1 = [0u8; 32];
            let mut s2 = [0u8; 32];
            rng.fill_bytes(&mut s1);
            rng.fill_bytes(&mut s2);
            assert_ne!(keygen(&s1, "a").public_key, keygen(&s2, "a").public_key);
        }
    }

    #[test]
    fn public_key_is_derivable_from_private_key() {
        let kp = pair(9);
        let seed: [u8; 32] = kp.private_key.clone().try_into().unwrap();
        assert_eq!(keygen(&seed, "other").public_key, kp.public_key);
    }

    #[test]
    fn signed_envelope_opens_only_under_matching_key() {
        let seller = pair(1);
        let other = pair(2);
        let env = sign_seal(&seller.private_key, b"hello").unwrap();
        assert_eq!(open_signed(&seller.public_key, &env.to_bytes()).unwrap(), b"hello");
        assert_eq!(
            open_signed(&other.public_key, &env.to_bytes()),
            Err(CryptoError::Authentication)
        );
    }

    #[test]
    fn tampered_signed_envelope_fails() {
        let seller = pair(1);
        let mut bytes = sign_seal(&seller.private_key, b"payload").unwrap().to_bytes();
        for i in 0..bytes.len() {
            bytes[i] ^= 0x01;
            assert!(open_signed(&seller.public_key, &bytes).is_err(), "flip at {i}");
            bytes[i] ^= 0x01;
        }
        bytes.push(0);
        assert!(open_signed(&seller.public_key, &bytes).is_err());
    }

    #[test]
    fn sealed_envelope_round_trip_and_wrong_key() {
        let buyer = pair(3);
        let other = pair(4);
        let sealed = conf_seal(&buyer.public_key, b"inner").unwrap();
        assert_eq!(conf_open(&buyer.private_key, &sealed.ciphertext).unwrap(), b"inner");
        assert_eq!(
            conf_open(&other.private_key, &sealed.ciphertext),
            Err(CryptoError::Decryption)
        );
        assert_eq!(conf_seal(&buyer.public_key, b"inner").unwrap(), sealed);
    }

    #[test]
    fn malformed_keys_are_errors() {
        assert!(matches!(sign_seal(&[1, 2, 3], b"m"), Err(CryptoError::MalformedKey(_))));
        assert!(matches!(conf_seal(&[0u8; 10], b"m"), Err(CryptoError::MalformedKey(_))));
        assert!(matches!(conf_open(&[0u8; 31], &[0u8; 64]), Err(CryptoError::MalformedKey(_))));
        // all-zero X25519 point is low order
        assert!(conf_seal(&[0u8; 64], b"m").is_err());
        assert!(open_signed(&[0u8; 3], &[0u8; 80]).is_err());
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = hash(b"x");
        assert_eq!(Digest::from_hex(&d.to_hex()).unwrap(), d);
        assert!(Digest::from_hex("zz").is_err());
        assert!(Digest::from_hex("00").is_err());
    }
}
