"""Two-qubit entanglement laboratory: measures, maximally entangled mixed
states, unitary-orbit searches and a decohered CNOT gate."""

__version__ = "0.1.0"
