"""Hybrid public-key sealing, symmetric authenticated encryption and padding.

Sealing is ECIES-style: an ephemeral X25519 key agreement, HKDF-SHA256 and
ChaCha20-Poly1305. Symmetric encryption is ChaCha20-Poly1305 with a random
nonce carried in front of the ciphertext. Every random byte is drawn from an
injected `numpy.random.Generator`, so a seeded generator reproduces every
ciphertext bit for bit.
"""

from typing import NewType

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from pydantic import BaseModel, ConfigDict, field_validator

from onion_wsn.core.exceptions import (
    AuthenticationError,
    EnvelopeError,
    PlaintextTooLargeError,
)

PK_LEN = 32
SK_LEN = 32
PRIVATE_KEY_LEN = 32
_TAG_LEN = 16
_NONCE_LEN = 12
_STREAM_NONCE = bytes(16)
_SEAL_NONCE = bytes(_NONCE_LEN)
_SEAL_INFO = b"onion-wsn seal v1"

SEAL_OVERHEAD = PK_LEN + _TAG_LEN
"""Bytes added by `seal`: the ephemeral public key and the Poly1305 tag."""

SYM_OVERHEAD = _NONCE_LEN + _TAG_LEN
"""Bytes added by `sym_encrypt`: the nonce and the Poly1305 tag."""

MAX_LAYER_PLAINTEXT = 1 << 20

SymKey = NewType("SymKey", bytes)


class KeyPair(BaseModel):
    """
    An X25519 key pair held as raw bytes.
    """

    public_key: bytes
    """
    Raw public key, PK_LEN bytes.
    """

    private_key: bytes
    """
    Raw private key, never logged.
    """

    model_config = ConfigDict(frozen=True)

    @field_validator("public_key", "private_key")
    @classmethod
    def validate_length(cls, v: bytes) -> bytes:
        if len(v) != PK_LEN:
            raise ValueError(f"X25519 keys are {PK_LEN} bytes, got {len(v)}")
        return v

    def __repr__(self) -> str:
        return f"KeyPair(public_key={self.public_key.hex()})"

    __str__ = __repr__


def generate_keypair(rng: np.random.Generator) -> KeyPair:
    """Derive an X25519 key pair from the next 32 bytes of `rng`."""
    private = X25519PrivateKey.from_private_bytes(rng.bytes(PRIVATE_KEY_LEN))
    return KeyPair(
        public_key=private.public_key().public_bytes_raw(),
        private_key=private.private_bytes_raw(),
    )


def public_key_for(private_key: bytes) -> bytes:
    """Recompute the public half of an X25519 private key."""
    return X25519PrivateKey.from_private_bytes(private_key).public_key().public_bytes_raw()


def generate_sym_key(rng: np.random.Generator) -> SymKey:
    return SymKey(rng.bytes(SK_LEN))


def _seal_key(shared_secret: bytes, ephemeral_public: bytes, recipient_public: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(),
        length=SK_LEN,
        salt=None,
        info=_SEAL_INFO + ephemeral_public + recipient_public,
    ).derive(shared_secret)


def seal(public_key: bytes, plaintext: bytes, rng: np.random.Generator) -> bytes:
    """Encrypt `plaintext` so only the holder of the matching private key can open it.

    Args:
        public_key: Recipient's raw X25519 public key.
        plaintext: At most MAX_LAYER_PLAINTEXT bytes.
        rng: Source of the ephemeral private key.

    Returns:
        ephemeral public key ‖ ciphertext ‖ tag; exactly SEAL_OVERHEAD bytes
        longer than `plaintext`.

    Raises:
        PlaintextTooLargeError: The plaintext exceeds MAX_LAYER_PLAINTEXT.
        EnvelopeError: The public key is not a usable X25519 key.
    """
    if len(plaintext) > MAX_LAYER_PLAINTEXT:
        raise PlaintextTooLargeError(
            f"Layer plaintext of {len(plaintext)} bytes exceeds {MAX_LAYER_PLAINTEXT}"
        )
    try:
        recipient = X25519PublicKey.from_public_bytes(public_key)
        ephemeral = X25519PrivateKey.from_private_bytes(rng.bytes(PRIVATE_KEY_LEN))
        shared_secret = ephemeral.exchange(recipient)
    except ValueError as e:
        raise EnvelopeError(f"Cannot seal to this public key: {e}") from e
    ephemeral_public = ephemeral.public_key().public_bytes_raw()
    key = _seal_key(shared_secret, ephemeral_public, public_key)
    # Fresh key per seal, so the fixed nonce is never reused under one key
    ciphertext = ChaCha20Poly1305(key).encrypt(_SEAL_NONCE, plaintext, ephemeral_public)
    return ephemeral_public + ciphertext


def open_sealed(private_key: bytes, sealed: bytes) -> bytes:
    """Inverse of `seal`.

    Raises:
        AuthenticationError: The envelope was not sealed to this key or was modified.
    """
    if len(sealed) < SEAL_OVERHEAD:
        raise AuthenticationError(f"Sealed envelope too short: {len(sealed)} bytes")
    ephemeral_public = sealed[:PK_LEN]
    try:
        own = X25519PrivateKey.from_private_bytes(private_key)
        shared_secret = own.exchange(X25519PublicKey.from_public_bytes(ephemeral_public))
    except ValueError as e:
        raise AuthenticationError(f"Invalid ephemeral key: {e}") from e
    key = _seal_key(shared_secret, ephemeral_public, own.public_key().public_bytes_raw())
    try:
        return ChaCha20Poly1305(key).decrypt(_SEAL_NONCE, sealed[PK_LEN:], ephemeral_public)
    except InvalidTag as e:
        raise AuthenticationError("Sealed envelope failed authentication") from e


def sym_encrypt(key: bytes, plaintext: bytes, rng: np.random.Generator) -> bytes:
    """Authenticated symmetric encryption; output is nonce ‖ ciphertext ‖ tag."""
    if len(plaintext) > MAX_LAYER_PLAINTEXT:
        raise PlaintextTooLargeError(
            f"Plaintext of {len(plaintext)} bytes exceeds {MAX_LAYER_PLAINTEXT}"
        )
    nonce = rng.bytes(_NONCE_LEN)
    return nonce + ChaCha20Poly1305(key).encrypt(nonce, plaintext, None)


def sym_decrypt(key: bytes, ciphertext: bytes) -> bytes:
    """Inverse of `sym_encrypt`.

    Raises:
        AuthenticationError: Wrong key or tampered ciphertext.
    """
    if len(ciphertext) < SYM_OVERHEAD:
        raise AuthenticationError(f"Ciphertext too short: {len(ciphertext)} bytes")
    nonce, body = ciphertext[:_NONCE_LEN], ciphertext[_NONCE_LEN:]
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, body, None)
    except InvalidTag as e:
        raise AuthenticationError("Ciphertext failed authentication") from e


def stream_xor(key: bytes, data: bytes) -> bytes:
    """XOR `data` with the ChaCha20 keystream of `key`; its own inverse.

    Each key is used for a single layer of a single query, so the keystream
    nonce is fixed.
    """
    encryptor = Cipher(algorithms.ChaCha20(key, _STREAM_NONCE), mode=None).encryptor()
    return encryptor.update(data) + encryptor.finalize()


def random_pad(rng: np.random.Generator, length: int) -> bytes:
    """Exactly `length` random bytes from `rng`."""
    if length < 0:
        raise ValueError(f"Padding length must be non-negative, got {length}")
    if length == 0:
        return b""
    return rng.bytes(length)
