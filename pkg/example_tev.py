"""
Exemplo de uso do pacote hyperbolic_tev
Este script calcula autovalores de transmissão radiais em H^2 e verifica o
critério de não anulação da transformada de Laplace em um quadrante.
"""

import math

from hyperbolic_tev import (
    ConeSpec,
    HyperbolicTevError,
    HypergeometricInput,
    RadialProblem,
    find_eigenvalues,
    gauss_2f1,
    harmonic_basis,
    nonvanishing_scan,
)


def main():
    """Demonstra o uso do pacote"""

    print("=" * 60)
    print("Exemplo - autovalores de transmissão no espaço hiperbólico")
    print("=" * 60)
    print()

    # 1. Função hipergeométrica contra a forma fechada em H^3
    print("1. Conferindo 2F1 contra sin(t r) / (t sinh r)...")
    print("-" * 60)
    t, r = 7.0, 1.3
    value = gauss_2f1(HypergeometricInput(s=1.0, t=t, c=1.5, x=-math.sinh(r / 2.0) ** 2))
    print(f"2F1 = {value:.15g}")
    print(f"forma fechada = {math.sin(t * r) / (t * math.sinh(r)):.15g}")
    print()

    # 2. Autovalores do problema de referência
    print("2. Autovalores para n=2, R=1, V0=0.5 (Helmholtz)...")
    print("-" * 60)
    try:
        prob = RadialProblem(n=2, R=1.0, V0=0.5, nu=1)
        result = find_eigenvalues(prob, 2000.0, 5.0)
        print(f"Encontrados {len(result)} autovalores:\n")
        for root in result.roots:
            print(f"{root.index}. lambda = {root.lam:.10f}   sqrt(lambda) = {math.sqrt(root.lam):.6f}")
    except HyperbolicTevError as e:
        print(f"Erro ao calcular autovalores: {str(e)}")

    print()

    # 3. Transformada de Laplace de polinômios harmônicos
    print("3. Varredura de não anulação no quadrante...")
    print("-" * 60)
    try:
        cone = ConeSpec.orthant(2)
        for P in harmonic_basis(2, 3):
            report = nonvanishing_scan(P, cone, sample_count=50, seed=7)
            status = "ok" if report.passed else "FALHOU"
            print(f"{P.label():<20} max |L| = {report.max_abs:.4e}  [{status}]")
    except HyperbolicTevError as e:
        print(f"Erro na varredura: {str(e)}")

    print()
    print("=" * 60)
    print("Exemplo concluído!")
    print("=" * 60)


if __name__ == "__main__":
    main()
