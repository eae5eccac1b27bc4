# Product integrals: steppers, evolution and identities
