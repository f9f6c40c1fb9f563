"""Spectrum-analyzer emulation and adiabaticity/delay reports."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitcomb import diagnostics
from eitcomb.errors import (
    InvalidArgumentError,
    LinewidthError,
    ResolutionError,
    ZeroEnergyError,
)
from eitcomb.model import FieldEnvelope, TimeGrid
from eitcomb.waveforms import (
    ControlComponent,
    ControlProgram,
    PulseTrainSpec,
    evaluate_program,
    matched_probe,
)

from conftest import GAMMA, cw_field, gaussian_field, medium_for_depth

GRID = TimeGrid(0.0, 51.2e-6, 4097)
DV = 2 * np.pi / GRID.span  # bin spacing of the full grid
# integer number of 1 MHz train periods (plus the shared endpoint sample)
GRID50 = TimeGrid(0.0, 50e-6, 4001)


def train_field(grid, rise_time=0.0, amplitude=1.0):
    mod = PulseTrainSpec(1e6, 0.2, rise_time=rise_time)
    return evaluate_program(ControlProgram(
        (ControlComponent(amplitude=amplitude, modulation=mod),)), grid)


def tone(grid, amp, freq, phase=0.0):
    return FieldEnvelope(
        grid, amp * np.exp(1j * (2 * np.pi * freq * grid.tau + phase)))


class TestHeterodyneSpectrum:
    def test_parseval(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=GRID.n_samples) + 1j * rng.normal(size=GRID.n_samples)
        f = FieldEnvelope(GRID, x)
        trace = diagnostics.heterodyne_spectrum(f, rbw=2 * np.pi * 100e3)
        assert trace.total_power() == pytest.approx(np.mean(np.abs(x) ** 2),
                                                    rel=1e-2)

    def test_two_tone_power_ratio(self):
        # bin-exact tones so no leakage clouds the ratio
        f1, f2 = 40 * DV / (2 * np.pi), -25 * DV / (2 * np.pi)
        f = FieldEnvelope(GRID, tone(GRID, 1.0, f1).samples
                          + tone(GRID, 0.5, f2).samples)
        trace = diagnostics.heterodyne_spectrum(f, rbw=2 * DV)
        p1 = trace.power_near(2 * np.pi * f1, 6 * DV)
        p2 = trace.power_near(2 * np.pi * f2, 6 * DV)
        assert p2 / p1 == pytest.approx(0.25, rel=1e-2)

    def test_lo_offset_shifts_axis(self):
        f0 = 2 * np.pi * 5e6
        f = tone(GRID, 1.0, 5e6)
        trace = diagnostics.heterodyne_spectrum(f, lo_offset=f0, rbw=3 * DV)
        peak = trace.frequencies[np.argmax(trace.power)]
        assert abs(peak) < 3 * DV

    def test_comb_lines_of_pulse_train(self):
        ctrl = train_field(GRID50)
        trace = diagnostics.heterodyne_spectrum(ctrl, rbw=2 * np.pi * 30e3)
        # teeth at multiples of 1 MHz, deep gaps in between
        on_teeth = sum(trace.power_near(2 * np.pi * k * 1e6, 2 * np.pi * 100e3)
                       for k in range(-3, 4))
        between = trace.power_near(2 * np.pi * 0.5e6, 2 * np.pi * 100e3)
        assert between < 1e-3 * on_teeth
        # sinc^2 comb envelope: tooth k carries duty^2 sinc^2(k duty)
        p0 = trace.power_near(0.0, 2 * np.pi * 100e3)
        p1 = trace.power_near(2 * np.pi * 1e6, 2 * np.pi * 100e3)
        assert p1 / p0 == pytest.approx(np.sinc(0.2) ** 2, rel=0.02)

    def test_rbw_below_resolution_rejected(self):
        f = cw_field(GRID, 1.0)
        with pytest.raises(ResolutionError):
            diagnostics.heterodyne_spectrum(f, rbw=0.1 * DV)

    def test_lo_beyond_nyquist_rejected(self):
        f = cw_field(GRID, 1.0)
        with pytest.raises(InvalidArgumentError):
            diagnostics.heterodyne_spectrum(f, lo_offset=2 * np.pi / GRID.dt)


class TestZeroSpan:
    def test_zero_field(self):
        f = FieldEnvelope(GRID, np.zeros(GRID.n_samples, dtype=complex))
        assert diagnostics.zero_span_power(f, 2 * np.pi * 1e6) == 0.0

    @given(alpha=st.floats(0.1, 10.0))
    @settings(max_examples=20, deadline=None)
    def test_quadratic_in_amplitude(self, alpha):
        grid = TimeGrid(0.0, 10e-6, 512)
        f = gaussian_field(grid, 1.0, 3e-6, 5e-6)
        base = diagnostics.zero_span_power(f, 2 * np.pi * 2e6)
        scaled = diagnostics.zero_span_power(
            f.with_samples(alpha * f.samples), 2 * np.pi * 2e6)
        assert scaled == pytest.approx(alpha**2 * base, rel=1e-9)

    def test_comb_inside_window_is_total_power(self):
        # rbw wide enough to hold the whole comb: zero-span sees everything.
        # (smooth edges keep the comb inside the window; a hard-edged train
        # spills a few percent past 30 MHz)
        ctrl = train_field(GRID50, rise_time=0.15e-6)
        total = np.mean(np.abs(ctrl.samples) ** 2)
        got = diagnostics.zero_span_power(ctrl, 2 * np.pi * 30e6)
        assert got == pytest.approx(total, rel=0.02)

    def test_narrow_window_keeps_carrier_only(self):
        ctrl = train_field(GRID50)
        got = diagnostics.zero_span_power(ctrl, 2 * np.pi * 0.5e6)
        # only the k = 0 tooth: duty^2 of the peak power
        assert got == pytest.approx(0.2**2, rel=0.02)


class TestModeOverlap:
    def test_proportional_fields(self):
        a = gaussian_field(GRID, 1.0, 5e-6, 20e-6)
        b = a.with_samples((0.3 - 0.4j) * a.samples)
        assert diagnostics.mode_overlap(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_scale_invariance(self):
        a = gaussian_field(GRID, 1.0, 5e-6, 20e-6)
        b = gaussian_field(GRID, 0.2, 8e-6, 24e-6)
        o_ab = diagnostics.mode_overlap(a, b)
        o_ba = diagnostics.mode_overlap(b, a)
        assert o_ab == pytest.approx(o_ba, rel=1e-12)
        assert diagnostics.mode_overlap(
            a.with_samples(5.0 * a.samples), b) == pytest.approx(o_ab,
                                                                 rel=1e-12)
        assert 0.0 < o_ab < 1.0

    def test_cw_against_train_is_duty(self):
        ctrl = train_field(GRID50)
        cw = cw_field(GRID50, 1.0)
        # |<cw, train>|^2 / (<cw><train>) = mean^2 / mean-square = duty
        assert diagnostics.mode_overlap(cw, ctrl) == pytest.approx(0.2,
                                                                   rel=0.01)

    def test_zero_energy_rejected(self):
        a = cw_field(GRID, 1.0)
        z = FieldEnvelope(GRID, np.zeros(GRID.n_samples, dtype=complex))
        with pytest.raises(ZeroEnergyError):
            diagnostics.mode_overlap(a, z)


class TestGroupVelocityEstimate:
    def test_delay_from_centroids(self):
        med = medium_for_depth(12.0)
        ref = gaussian_field(GRID, 1.0, 6e-6, 14e-6)
        out = gaussian_field(GRID, 0.8, 6e-6, 16e-6)
        delay, v_local, v_lab = diagnostics.group_velocity_estimate(
            out, ref, med)
        assert delay == pytest.approx(2e-6, abs=GRID.dt)
        assert v_local == pytest.approx(med.length / 2e-6, rel=1e-3)
        assert v_lab < v_local  # vacuum flight time folds in

    def test_small_delay_warns(self):
        med = medium_for_depth(12.0)
        ref = gaussian_field(GRID, 1.0, 6e-6, 14e-6)
        with pytest.warns(UserWarning, match="two time steps"):
            diagnostics.group_velocity_estimate(ref, ref, med)


class TestAdiabaticityCheck:
    def test_cw_control_gaussian_probe_oracle(self):
        # gaussian amplitude exp(-4 ln2 (t/F)^2) has RMS spectral width
        # 2 sqrt(ln2)/F, so margin_a = Omega_c * F / (2 sqrt(ln2))
        med = medium_for_depth(12.0)
        amp = 2 * np.pi * 2e6
        fwhm = 8e-6
        ctrl = cw_field(GRID, amp)
        probe = gaussian_field(GRID, 1e-3 * amp, fwhm, 24e-6)
        rep = diagnostics.adiabaticity_check(probe, ctrl, med)
        assert rep.margin_a == pytest.approx(amp * fwhm / (2 * np.sqrt(np.log(2))),
                                             rel=0.05)
        assert rep.margin_c == pytest.approx(amp**2 * rep.T / med.gamma,
                                             rel=1e-9)

    def test_matched_train_equals_cw_pair(self):
        med = medium_for_depth(12.0)
        amp = 2 * np.pi * 2e6
        env = gaussian_field(GRID, 1e-3 * amp, 10e-6, 24e-6)
        cw_rep = diagnostics.adiabaticity_check(env, cw_field(GRID, amp), med)
        mod = PulseTrainSpec(1e6, 0.2)
        ctrl = evaluate_program(ControlProgram(
            (ControlComponent(amplitude=amp, modulation=mod),)), GRID)
        tr_rep = diagnostics.adiabaticity_check(matched_probe(ctrl, env),
                                                ctrl, med)
        # modulation is common mode: only the envelopes matter
        assert tr_rep.margin_a == pytest.approx(cw_rep.margin_a, rel=0.1)
        assert tr_rep.margin_b == pytest.approx(cw_rep.margin_b, rel=0.1)

    def test_mismatched_probe_collapses_margin_b(self):
        med = medium_for_depth(12.0)
        amp = 2 * np.pi * 2e6
        env = gaussian_field(GRID, 1e-3 * amp, 10e-6, 24e-6)
        mod = PulseTrainSpec(1e6, 0.2)
        ctrl = evaluate_program(ControlProgram(
            (ControlComponent(amplitude=amp, modulation=mod),)), GRID)
        matched = diagnostics.adiabaticity_check(matched_probe(ctrl, env),
                                                 ctrl, med)
        mismatched = diagnostics.adiabaticity_check(env, ctrl, med)
        # mismatch makes c_c broadband: margin_b collapses ~100x
        assert mismatched.margin_b < 5e-2 * matched.margin_b

    @given(alpha=st.floats(1e-3, 1e3))
    @settings(max_examples=15, deadline=None)
    def test_probe_amplitude_invariance(self, alpha):
        med = medium_for_depth(12.0)
        amp = 2 * np.pi * 2e6
        grid = TimeGrid(0.0, 20e-6, 1025)
        ctrl = cw_field(grid, amp)
        probe = gaussian_field(grid, 1e-3 * amp, 5e-6, 10e-6)
        base = diagnostics.adiabaticity_check(probe, ctrl, med)
        scaled = diagnostics.adiabaticity_check(
            probe.with_samples(alpha * probe.samples), ctrl, med)
        assert scaled.margin_a == pytest.approx(base.margin_a, rel=1e-6)

    def test_zero_fields_rejected(self):
        med = medium_for_depth(12.0)
        z = FieldEnvelope(GRID, np.zeros(GRID.n_samples, dtype=complex))
        with pytest.raises(ZeroEnergyError):
            diagnostics.adiabaticity_check(z, cw_field(GRID, 1.0), med)


class TestDelayBandwidthReport:
    @staticmethod
    def lorentzian_scan(fwhm, n=101, span_mult=6.0):
        x = np.linspace(-span_mult * fwhm, span_mult * fwhm, n)
        y = 1.0 / (1.0 + (2 * x / fwhm) ** 2)
        return x, y

    def test_fwhm_recovered(self):
        fwhm = 2 * np.pi * 100e3
        x, y = self.lorentzian_scan(fwhm)
        rep = diagnostics.delay_bandwidth_report(x, y, 2 * np.pi * 5e6)
        assert rep.gamma_eit == pytest.approx(fwhm, rel=0.02)
        assert rep.enhancement == pytest.approx(50.0, rel=0.02)

    def test_equal_bandwidths_give_unity(self):
        fwhm = 2 * np.pi * 1e6
        x, y = self.lorentzian_scan(fwhm)
        rep = diagnostics.delay_bandwidth_report(x, y, fwhm)
        assert rep.enhancement == pytest.approx(1.0, rel=0.02)

    def test_peak_at_edge_rejected(self):
        x = np.linspace(0.0, 1.0, 21)
        y = x.copy()  # monotone: peak at the edge
        with pytest.raises(LinewidthError):
            diagnostics.delay_bandwidth_report(x, y, 1.0)

    def test_unresolved_crossing_rejected(self):
        # right flank never falls to half maximum inside the scan
        x = np.linspace(0.0, 1.0, 21)
        y = np.concatenate([np.linspace(0.0, 1.0, 11),
                            np.linspace(0.98, 0.8, 10)])
        with pytest.raises(LinewidthError):
            diagnostics.delay_bandwidth_report(x, y, 1.0)

    def test_short_scan_rejected(self):
        with pytest.raises(InvalidArgumentError):
            diagnostics.delay_bandwidth_report(np.arange(3.0),
                                               np.arange(3.0), 1.0)
