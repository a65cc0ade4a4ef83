"""
ElGamal and its multiplicative homomorphism
===========================================

Multiplying two ciphertexts component by component gives a ciphertext of
the product of the plaintexts.  The whole protocol rests on this.
"""

import random

from privdist import decrypt, encrypt, hom_mul, keygen, load_standard_group

# A toy group first, small enough to check by hand: p = 23, q = 11, g = 2.
g23 = load_standard_group("test-23")
key = keygen(g23, s=5)
print("public key y = g^s mod p =", key.y)

a = encrypt(g23, key.y, 4, r=3)
b = encrypt(g23, key.y, 3, r=1)
print("E(4) =", a, " E(3) =", b)
print("E(4)*E(3) =", hom_mul(g23, a, b), "-> decrypts to", decrypt(g23, key.s, hom_mul(g23, a, b)))

# Encryption is randomised: the same plaintext gives different ciphertexts.
g = load_standard_group("modp-2048")
rng = random.Random(1)
key = keygen(g, rng)
c1, c2 = encrypt(g, key.y, 42, rng=rng), encrypt(g, key.y, 42, rng=rng)
print("\ntwo encryptions of 42 equal?", c1 == c2)

# A product of many factors, in any order.
ms = [rng.randrange(2, 10**6) for _ in range(5)]
cts = [encrypt(g, key.y, m, rng=rng) for m in ms]
rng.shuffle(cts)
prod = 1
for m in ms:
    prod = prod * m % g.p
print("product of 5 plaintexts recovered:", decrypt(g, key.s, hom_mul(g, *cts)) == prod)
