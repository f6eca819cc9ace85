class Presets:
    """Ablation presets: which terms of the objective are switched on."""

    class Full:
        unif_enabled = True
        pl_enabled = True
        balancing_enabled = True

    class EntOnly:
        unif_enabled = False
        pl_enabled = False
        balancing_enabled = False

    class EntPl:
        unif_enabled = False
        pl_enabled = True
        balancing_enabled = False

    class EntUnifPl:
        unif_enabled = True
        pl_enabled = True
        balancing_enabled = False

    class NoBalancing:
        unif_enabled = True
        pl_enabled = True
        balancing_enabled = False


class Severity:
    """Severity-indexed parameters, entry s-1 is severity s."""

    class GaussianNoise:
        sigma = [0.04, 0.08, 0.12, 0.18, 0.26]

    class ShotNoise:
        photons = [60, 25, 12, 5, 3]

    class ImpulseNoise:
        amount = [0.01, 0.03, 0.06, 0.1, 0.17]

    class DefocusBlur:
        radius = [1, 2, 3, 4, 6]

    class MotionBlur:
        length = [3, 5, 7, 9, 12]
        angle = 45.0

    class Contrast:
        scale = [0.75, 0.5, 0.4, 0.3, 0.15]

    class Brightness:
        offset = [0.1, 0.2, 0.3, 0.4, 0.5]

    class Pixelate:
        factor = [0.6, 0.5, 0.4, 0.3, 0.25]

    class JpegLike:
        quality = [80, 60, 40, 25, 10]


# Standard JPEG luminance quantisation table (quality 50).
JPEG_LUMA_TABLE = [
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
]
